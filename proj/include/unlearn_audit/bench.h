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

#ifndef UNLEARN_AUDIT_BENCH_H_
#define UNLEARN_AUDIT_BENCH_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "unlearn_audit/risk.h"

namespace unlearn_audit {

// Dataset-level comparison of the three attacks against one target pool.
// Each attack trains its own shadows, and the reported wall-clock covers
// shadow training plus scoring.
struct BenchConfig {
  // Evaluated samples, drawn at random; 0 means the whole dataset.
  int64_t num_samples = 32;
  int online_shadows = 32;
  int offline_shadows = 16;
  // When positive, a separate pool of this many models supplies the
  // non-member scores that fix tau (the alternative to thresholding on the
  // evaluation pool itself).
  int calibration_models = 0;
  double fpr = 0.01;
  uint64_t seed = 0;
};

struct BenchRow {
  AttackKind kind = AttackKind::kAlira;
  double auc = 0.0;
  double tpr_at_fpr = 0.0;
  std::optional<double> tpr_at_fpr_calibrated;
  double wall_clock_seconds = 0.0;
  int shadow_models_trained = 0;
  int64_t scored_pairs = 0;
};

absl::StatusOr<std::vector<BenchRow>> RunAttackBench(const Dataset& dataset,
                                                     const ModelPool& targets,
                                                     const AttackConfig& attack,
                                                     const BenchConfig& bench, int workers = 1);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_BENCH_H_
