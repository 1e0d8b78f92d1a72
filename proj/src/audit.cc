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

#include "unlearn_audit/audit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "absl/strings/str_cat.h"
#include "unlearn_audit/status_macros.h"

namespace unlearn_audit {
namespace {

absl::StatusOr<const RiskRecord*> Lookup(const RiskTable& table, int64_t id,
                                         absl::string_view which) {
  const RiskRecord* r = table.Find(id);
  if (r == nullptr) {
    return absl::FailedPreconditionError(
        absl::StrCat("coverage: sample ", id, " missing from the ", which, " risk table"));
  }
  return r;
}

nlohmann::json JsonNumber(double v) {
  if (std::isfinite(v)) return v;
  return FormatDouble(v);
}

absl::StatusOr<double> NumberFromJson(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return ParseDouble(j.get<std::string>());
  return absl::DataLossError("expected a number");
}

}  // namespace

absl::Status ValidateThresholds(const Thresholds& t) {
  if (!(t.t1 >= 0.0)) return absl::InvalidArgumentError("t1 must be >= 0");
  if (!(t.t_abs >= 0.0)) return absl::InvalidArgumentError("t_abs must be >= 0");
  if (!(t.epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be positive");
  if (!std::isfinite(t.t2)) return absl::InvalidArgumentError("t2 must be finite");
  return absl::OkStatus();
}

absl::string_view CriterionName(Criterion criterion) {
  switch (criterion) {
    case Criterion::kC1:
      return "c1";
    case Criterion::kC1Abs:
      return "c1_abs";
    case Criterion::kC2Dp:
      return "c2_dp";
    case Criterion::kC2NonDp:
      return "c2_nondp";
  }
  return "unknown";
}

absl::StatusOr<Criterion> ParseCriterion(absl::string_view name) {
  for (Criterion c : {Criterion::kC1, Criterion::kC1Abs, Criterion::kC2Dp, Criterion::kC2NonDp}) {
    if (CriterionName(c) == name) return c;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown criterion '", name, "'"));
}

absl::string_view DirectionName(Direction direction) {
  return direction == Direction::kTop ? "top" : "bottom";
}

absl::StatusOr<Direction> ParseDirection(absl::string_view name) {
  if (name == "top") return Direction::kTop;
  if (name == "bottom") return Direction::kBottom;
  return absl::InvalidArgumentError(absl::StrCat("unknown direction '", name, "'"));
}

absl::StatusOr<std::vector<int64_t>> SelectByRisk(const RiskTable& table, double k,
                                                  Direction direction) {
  if (!(k > 0.0 && k <= 0.5)) return absl::InvalidArgumentError("k must be in (0, 0.5]");
  if (table.records.empty()) return absl::InvalidArgumentError("empty risk table");
  std::vector<const RiskRecord*> order;
  order.reserve(table.records.size());
  for (const RiskRecord& r : table.records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [direction](const RiskRecord* a, const RiskRecord* b) {
    if (a->ln_ratio != b->ln_ratio) {
      return direction == Direction::kTop ? a->ln_ratio > b->ln_ratio : a->ln_ratio < b->ln_ratio;
    }
    return a->sample_id < b->sample_id;
  });
  const double n = static_cast<double>(order.size());
  const size_t count = static_cast<size_t>(std::ceil(k * n - 1e-9));
  std::vector<int64_t> ids;
  for (size_t i = 0; i < count && i < order.size(); ++i) ids.push_back(order[i]->sample_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion1(const RiskTable& before,
                                                              const RiskTable& after,
                                                              absl::Span<const int64_t> forget_ids,
                                                              double t1, double t_abs) {
  std::vector<CriterionVerdict> c1, c1_abs;
  for (int64_t id : forget_ids) {
    ASSIGN_OR_RETURN(const RiskRecord* b, Lookup(before, id, "before"));
    ASSIGN_OR_RETURN(const RiskRecord* a, Lookup(after, id, "after"));
    const double bound = b->ratio - t1;
    c1.push_back({id, Criterion::kC1, a->ratio < bound, bound - a->ratio});
    c1_abs.push_back({id, Criterion::kC1Abs, a->ln_ratio < t_abs, t_abs - a->ln_ratio});
  }
  c1.insert(c1.end(), c1_abs.begin(), c1_abs.end());
  return c1;
}

absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion2Dp(
    const RiskTable& after, absl::Span<const int64_t> retained_ids, double epsilon) {
  std::vector<CriterionVerdict> out;
  for (int64_t id : retained_ids) {
    ASSIGN_OR_RETURN(const RiskRecord* a, Lookup(after, id, "after"));
    out.push_back({id, Criterion::kC2Dp, a->ln_ratio <= epsilon, epsilon - a->ln_ratio});
  }
  return out;
}

absl::StatusOr<std::vector<CriterionVerdict>> CheckCriterion2NonDp(
    const RiskTable& before, const RiskTable& after, absl::Span<const int64_t> retained_ids,
    double t2) {
  if (before.records.empty()) return absl::InvalidArgumentError("empty before table");
  double bound = -std::numeric_limits<double>::infinity();
  for (const RiskRecord& r : before.records) bound = std::max(bound, r.ratio);
  bound += t2;
  std::vector<CriterionVerdict> out;
  for (int64_t id : retained_ids) {
    ASSIGN_OR_RETURN(const RiskRecord* a, Lookup(after, id, "after"));
    out.push_back({id, Criterion::kC2NonDp, a->ratio <= bound, bound - a->ratio});
  }
  return out;
}

absl::StatusOr<double> FailureRate(absl::Span<const CriterionVerdict> verdicts) {
  if (verdicts.empty()) return absl::InvalidArgumentError("no verdicts");
  const auto fails = std::count_if(verdicts.begin(), verdicts.end(),
                                   [](const CriterionVerdict& v) { return !v.pass; });
  return static_cast<double>(fails) / static_cast<double>(verdicts.size());
}

absl::StatusOr<AuditReport> BuildReport(const RiskTable& before, const RiskTable& after,
                                        absl::Span<const int64_t> forget_ids,
                                        const Thresholds& thresholds, std::string provenance) {
  RETURN_IF_ERROR(ValidateThresholds(thresholds));
  if (before.records.empty()) return absl::InvalidArgumentError("empty before table");
  AuditReport report;
  report.thresholds = thresholds;
  report.provenance = std::move(provenance);
  report.forget_ids.assign(forget_ids.begin(), forget_ids.end());
  std::sort(report.forget_ids.begin(), report.forget_ids.end());
  report.forget_ids.erase(std::unique(report.forget_ids.begin(), report.forget_ids.end()),
                          report.forget_ids.end());

  std::vector<int64_t> retained;
  for (const RiskRecord& r : before.records) {
    if (!std::binary_search(report.forget_ids.begin(), report.forget_ids.end(), r.sample_id)) {
      retained.push_back(r.sample_id);
    }
  }

  ASSIGN_OR_RETURN(
      std::vector<CriterionVerdict> c1,
      CheckCriterion1(before, after, report.forget_ids, thresholds.t1, thresholds.t_abs));
  ASSIGN_OR_RETURN(std::vector<CriterionVerdict> c2_dp,
                   CheckCriterion2Dp(after, retained, thresholds.epsilon));
  ASSIGN_OR_RETURN(std::vector<CriterionVerdict> c2_nondp,
                   CheckCriterion2NonDp(before, after, retained, thresholds.t2));

  const size_t half = c1.size() / 2;
  if (half > 0) {
    ASSIGN_OR_RETURN(report.failure_rate_c1, FailureRate(absl::MakeConstSpan(c1).subspan(0, half)));
    ASSIGN_OR_RETURN(report.failure_rate_c1_abs,
                     FailureRate(absl::MakeConstSpan(c1).subspan(half)));
  }
  if (!retained.empty()) {
    ASSIGN_OR_RETURN(report.failure_rate_c2_dp, FailureRate(c2_dp));
    ASSIGN_OR_RETURN(report.failure_rate_c2_nondp, FailureRate(c2_nondp));
  }
  report.failure_rate_c2 =
      thresholds.dp_mode ? report.failure_rate_c2_dp : report.failure_rate_c2_nondp;

  report.nondp_bound = -std::numeric_limits<double>::infinity();
  report.min_fpr_floor = 1.0;
  for (const RiskRecord& r : before.records) {
    report.nondp_bound = std::max(report.nondp_bound, r.ratio);
    report.min_fpr_floor = std::min(report.min_fpr_floor, r.fpr_floor);
  }
  for (const RiskRecord& r : after.records) {
    report.min_fpr_floor = std::min(report.min_fpr_floor, r.fpr_floor);
  }
  report.ln_ratio_ceiling = report.min_fpr_floor > 0.0 ? -std::log(report.min_fpr_floor)
                                                       : std::numeric_limits<double>::infinity();

  report.verdicts = std::move(c1);
  report.verdicts.insert(report.verdicts.end(), c2_dp.begin(), c2_dp.end());
  report.verdicts.insert(report.verdicts.end(), c2_nondp.begin(), c2_nondp.end());
  return report;
}

nlohmann::json ReportToJson(const AuditReport& report) {
  const auto optional_number = [](const std::optional<double>& v) -> nlohmann::json {
    return v.has_value() ? JsonNumber(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["config_hash"] = report.config_hash;
  j["provenance"] = report.provenance;
  j["conventions"] = {
      {"c1", "after.ratio < before.ratio - t1, on raw TPR/FPR"},
      {"c1_abs", "after.ln_ratio < t_abs"},
      {"c2_dp", "after.ln_ratio <= epsilon"},
      {"c2_nondp", "after.ratio <= max(before.ratio) + t2, on raw TPR/FPR"},
      {"failure_rate_c2", report.thresholds.dp_mode ? "c2_dp" : "c2_nondp"},
  };
  j["thresholds"] = {{"t1", report.thresholds.t1},
                     {"t_abs", report.thresholds.t_abs},
                     {"epsilon", report.thresholds.epsilon},
                     {"t2", report.thresholds.t2},
                     {"dp_mode", report.thresholds.dp_mode}};
  j["failure_rate_c1"] = optional_number(report.failure_rate_c1);
  j["failure_rate_c1_abs"] = optional_number(report.failure_rate_c1_abs);
  j["failure_rate_c2"] = JsonNumber(report.failure_rate_c2);
  j["failure_rate_c2_dp"] = JsonNumber(report.failure_rate_c2_dp);
  j["failure_rate_c2_nondp"] = JsonNumber(report.failure_rate_c2_nondp);
  j["nondp_bound"] = JsonNumber(report.nondp_bound);
  j["fpr_floor"] = {{"rule", "1 / non-member model count, per sample"},
                    {"min", JsonNumber(report.min_fpr_floor)},
                    {"ln_ratio_ceiling", JsonNumber(report.ln_ratio_ceiling)}};
  j["forget_ids"] = report.forget_ids;
  nlohmann::json verdicts = nlohmann::json::array();
  for (const CriterionVerdict& v : report.verdicts) {
    verdicts.push_back({{"sample_id", v.sample_id},
                        {"criterion", std::string(CriterionName(v.criterion))},
                        {"pass", v.pass},
                        {"margin", JsonNumber(v.margin)}});
  }
  j["verdicts"] = std::move(verdicts);
  return j;
}

absl::StatusOr<AuditReport> ReportFromJson(const nlohmann::json& j) {
  try {
    AuditReport report;
    report.config_hash = j.at("config_hash").get<std::string>();
    report.provenance = j.at("provenance").get<std::string>();
    const auto& t = j.at("thresholds");
    report.thresholds.t1 = t.at("t1").get<double>();
    report.thresholds.t_abs = t.at("t_abs").get<double>();
    report.thresholds.epsilon = t.at("epsilon").get<double>();
    report.thresholds.t2 = t.at("t2").get<double>();
    report.thresholds.dp_mode = t.at("dp_mode").get<bool>();
    for (auto [key, field] : {std::pair{"failure_rate_c1", &report.failure_rate_c1},
                              std::pair{"failure_rate_c1_abs", &report.failure_rate_c1_abs}}) {
      if (!j.at(key).is_null()) {
        ASSIGN_OR_RETURN(double v, NumberFromJson(j.at(key)));
        *field = v;
      }
    }
    ASSIGN_OR_RETURN(report.failure_rate_c2, NumberFromJson(j.at("failure_rate_c2")));
    ASSIGN_OR_RETURN(report.failure_rate_c2_dp, NumberFromJson(j.at("failure_rate_c2_dp")));
    ASSIGN_OR_RETURN(report.failure_rate_c2_nondp, NumberFromJson(j.at("failure_rate_c2_nondp")));
    ASSIGN_OR_RETURN(report.nondp_bound, NumberFromJson(j.at("nondp_bound")));
    ASSIGN_OR_RETURN(report.min_fpr_floor, NumberFromJson(j.at("fpr_floor").at("min")));
    ASSIGN_OR_RETURN(report.ln_ratio_ceiling,
                     NumberFromJson(j.at("fpr_floor").at("ln_ratio_ceiling")));
    report.forget_ids = j.at("forget_ids").get<std::vector<int64_t>>();
    for (const auto& v : j.at("verdicts")) {
      CriterionVerdict verdict;
      verdict.sample_id = v.at("sample_id").get<int64_t>();
      ASSIGN_OR_RETURN(verdict.criterion, ParseCriterion(v.at("criterion").get<std::string>()));
      verdict.pass = v.at("pass").get<bool>();
      ASSIGN_OR_RETURN(verdict.margin, NumberFromJson(v.at("margin")));
      report.verdicts.push_back(verdict);
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("malformed audit report: ", e.what()));
  }
}

absl::Status WriteVerdicts(absl::Span<const CriterionVerdict> verdicts, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << "sample_id,criterion,pass,margin\n";
  for (const CriterionVerdict& v : verdicts) {
    out << v.sample_id << ',' << CriterionName(v.criterion) << ',' << (v.pass ? 1 : 0) << ','
        << FormatDouble(v.margin) << '\n';
  }
  out.flush();
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

}  // namespace unlearn_audit
