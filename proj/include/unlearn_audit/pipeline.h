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

#ifndef UNLEARN_AUDIT_PIPELINE_H_
#define UNLEARN_AUDIT_PIPELINE_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "unlearn_audit/config.h"
#include "unlearn_audit/manifest.h"

namespace unlearn_audit {

enum class Stage { kGenData, kTrainPool, kAttackBench, kRisk, kUnlearn, kAudit };

absl::string_view StageName(Stage stage);
absl::StatusOr<Stage> ParseStage(absl::string_view name);

// Stages in execution order.
const std::vector<Stage>& AllStages();

// Stages whose artifacts `stage` reads directly.
std::vector<Stage> Prerequisites(Stage stage);

struct PipelineOptions {
  // Replaces the config's output_dir when set.
  std::optional<std::string> out_dir = std::nullopt;
  int workers = 1;
  // Discards an existing manifest, including one written for another config.
  bool overwrite = false;
  // Progress lines; ignored when empty.
  std::function<void(absl::string_view)> log = nullptr;
};

// Runs stages against one output directory. Completed stages are skipped;
// a stage that runs invalidates every stage downstream of it.
class Pipeline {
 public:
  // Fails with FailedPrecondition if the directory holds a manifest for a
  // different config and overwrite is not set.
  static absl::StatusOr<Pipeline> Open(const ExperimentConfig& config,
                                       const PipelineOptions& options);

  // Runs one stage. Every transitive prerequisite must already be complete.
  absl::Status Run(Stage stage);

  // Runs every incomplete stage in order.
  absl::Status RunAll();

  const std::string& run_dir() const { return run_dir_; }
  const std::string& config_hash() const { return hash_; }
  const RunManifest& manifest() const { return manifest_; }

  // Stages executed (not skipped) since Open.
  const std::vector<Stage>& executed() const { return executed_; }

  // Artifact file name carrying the short config hash, e.g.
  // ArtifactName("risk-before", ".csv") -> "risk-before-<hash16>.csv".
  std::string ArtifactName(absl::string_view base, absl::string_view extension) const;
  std::string PathOf(absl::string_view relative) const;

 private:
  Pipeline(ExperimentConfig config, PipelineOptions options, std::string run_dir, std::string hash);

  absl::Status RunStage(Stage stage);
  absl::Status Execute(Stage stage, StageRecord& record);
  void Log(absl::string_view line) const;

  absl::Status GenData(StageRecord& record);
  absl::Status TrainPool(StageRecord& record);
  absl::Status AttackBench(StageRecord& record);
  absl::Status Risk(StageRecord& record);
  absl::Status Unlearn(StageRecord& record);
  absl::Status Audit(StageRecord& record);

  ExperimentConfig config_;
  PipelineOptions options_;
  std::string run_dir_;
  std::string hash_;
  RunManifest manifest_;
  std::vector<Stage> executed_;
};

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_PIPELINE_H_
