//
// Copyright 2026 The Unlearning Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef UNLEARN_AUDIT_AUDIT_H_
#define UNLEARN_AUDIT_AUDIT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "absl/types/span.h"
#include "nlohmann/json.hpp"
#include "unlearn_audit/risk.h"

namespace unlearn_audit {

struct Thresholds {
  // Criterion 1 margin on raw TPR/FPR ratios.
  double t1 = 0.0;
  // Absolute budget on ln(TPR/FPR) for forgotten samples.
  double t_abs = 0.01;
  // DP budget compared against ln(TPR/FPR) of retained samples.
  double epsilon = 2.0;
  // Relaxation of the non-DP bound max(before ratio) + t2.
  double t2 = 0.0;
  bool dp_mode = false;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

absl::Status ValidateThresholds(const Thresholds& thresholds);

enum class Criterion { kC1, kC1Abs, kC2Dp, kC2NonDp };
absl::string_view CriterionName(Criterion criterion);
absl::StatusOr<Criterion> ParseCriterion(absl::string_view name);

struct CriterionVerdict {
  int64_t sample_id = 0;
  Criterion criterion = Criterion::kC1;
  bool pass = false;
  // Signed distance to the bound; positive when passing.
  double margin = 0.0;

  friend bool operator==(const CriterionVerdict&, const CriterionVerdict&) = default;
};

enum class Direction { kTop, kBottom };
absl::string_view DirectionName(Direction direction);
absl::StatusOr<Direction> ParseDirection(absl::string_view name);

// The ceil(k * |table|) ids with the largest (top) or smallest (bottom)
// ln_ratio; ties go to the smaller sample id. Returned in ascending id order.
absl::StatusOr<std::vector<int64_t>> SelectByRisk(const RiskTable& table, double k,
                                                  Direction direction);

// c1: after.ratio < before.ratio - t1, margin (before.ratio - t1) - after.ratio.
// c1_abs: after.ln_ratio < t_abs, margin t_abs - after.ln_ratio.
// Returns the c1 verdicts followed by the c1_abs verdicts.
absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion1(const RiskTable& before,
                                                              const RiskTable& after,
                                                              absl::Span<const int64_t> forget_ids,
                                                              double t1, double t_abs);

// ln_ratio <= epsilon, margin epsilon - ln_ratio.
absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion2Dp(
    const RiskTable& after, absl::Span<const int64_t> retained_ids, double epsilon);

// after.ratio <= max over the before table of ratio + t2.
absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion2NonDp(
    const RiskTable& before, const RiskTable& after, absl::Span<const int64_t> retained_ids,
    double t2);

// Fraction of failing verdicts.
absl::StatusOr<double> FailureRate(absl::Span<const CriterionVerdict> verdicts);

struct AuditReport {
  std::optional<double> failure_rate_c1;
  std::optional<double> failure_rate_c1_abs;
  double failure_rate_c2 = 0.0;
  double failure_rate_c2_dp = 0.0;
  double failure_rate_c2_nondp = 0.0;
  // Largest before-unlearning ratio, the Criterion 2 bound without t2.
  double nondp_bound = 0.0;
  std::vector<int64_t> forget_ids;
  std::vector<CriterionVerdict> verdicts;
  Thresholds thresholds;
  std::string provenance;
  std::string config_hash;
  double min_fpr_floor = 0.0;
  // ln(1 / min_fpr_floor): no estimated ln_ratio can exceed it.
  double ln_ratio_ceiling = 0.0;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// Runs every check; retained ids are all ids of `before` not in forget_ids.
// thresholds.dp_mode decides which Criterion 2 variant fills
// failure_rate_c2.
absl::StatusOr<AuditReport> BuildReport(const RiskTable& before, const RiskTable& after,
                                        absl::Span<const int64_t> forget_ids,
                                        const Thresholds& thresholds, std::string provenance);

nlohmann::json ReportToJson(const AuditReport& report);
absl::StatusOr<AuditReport> ReportFromJson(const nlohmann::json& json);

// sample_id,criterion,pass,margin
absl::Status WriteVerdicts(absl::Span<const CriterionVerdict> verdicts, const std::string& path);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_AUDIT_H_
