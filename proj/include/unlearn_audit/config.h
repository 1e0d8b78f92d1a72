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

#ifndef UNLEARN_AUDIT_CONFIG_H_
#define UNLEARN_AUDIT_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "unlearn_audit/audit.h"
#include "unlearn_audit/bench.h"
#include "unlearn_audit/data.h"
#include "unlearn_audit/model.h"
#include "unlearn_audit/risk.h"
#include "unlearn_audit/unlearn.h"

namespace unlearn_audit {

struct DatasetSection {
  // "synthetic" or "delimited".
  std::string source = "synthetic";
  int64_t n_samples = 2000;
  int num_classes = 10;
  int feature_dim = 32;
  double cluster_spread = 0.5;
  uint64_t seed = 1;
  // Only for source = "delimited".
  std::string path;
  // Optional image layout of the features, required by grid augmentation.
  std::optional<GridLayout> grid;
};

struct DpSection {
  double clip_norm = 1.0;
  double delta = 1e-5;
  // Exactly one of the two is set; a target epsilon is converted to the
  // smallest noise multiplier that meets it under the accountant.
  std::optional<double> noise_multiplier = std::nullopt;
  std::optional<double> target_epsilon = std::nullopt;
};

struct ModelSection {
  std::vector<int> hidden = {32};
  TrainConfig train;
  std::optional<DpSection> dp;
};

struct PoolSection {
  int m = 32;
  uint64_t base_seed = 1000;
};

struct AttackSection {
  AttackConfig attack;
  BenchConfig bench;
};

struct UnlearnSection {
  // The first method is the primary one: its unlearned pool is persisted and
  // it fills the audit report. The rest only contribute to the k sweep.
  std::vector<UnlearnMethod> methods = {UnlearnMethod::kFinetune};
  std::map<UnlearnMethod, UnlearnConfig> params;
  uint64_t seed = 3;

  // Method parameters with the section seed applied.
  UnlearnConfig ConfigFor(UnlearnMethod method) const;
};

struct AuditSection {
  Thresholds thresholds;
  double k = 0.05;
  Direction direction = Direction::kTop;
  std::vector<double> k_sweep = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
  std::vector<Direction> directions = {Direction::kTop, Direction::kBottom};
};

struct ExperimentConfig {
  DatasetSection dataset;
  ModelSection model;
  PoolSection pool;
  AttackSection attack;
  UnlearnSection unlearn;
  AuditSection audit;
  std::string output_dir = "runs/default";

  // Full layer widths: feature_dim, hidden..., num_classes.
  std::vector<int> Arch() const;
};

// Strict parse: unknown keys, wrong types and out-of-range values are
// InvalidArgument errors. Missing keys take the defaults above.
absl::StatusOr<ExperimentConfig> ConfigFromJson(const nlohmann::json& json);
absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path);

// Every field, defaults included, so equal configs serialize identically.
nlohmann::json ConfigToJson(const ExperimentConfig& config);

// Lowercase hex SHA-256 of the canonical JSON without output_dir.
std::string ConfigHash(const ExperimentConfig& config);

// Resolves the DP section into the trainer's DpConfig. A target epsilon is
// met for the step count of a model trained on `members` samples.
absl::StatusOr<std::optional<DpConfig>> ResolveDp(const ExperimentConfig& config, int64_t members);

// Lowercase hex SHA-256 of `bytes`.
std::string Sha256Hex(const std::string& bytes);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_CONFIG_H_
