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

#ifndef UNLEARN_AUDIT_RISK_H_
#define UNLEARN_AUDIT_RISK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "unlearn_audit/attack.h"
#include "unlearn_audit/data.h"
#include "unlearn_audit/model.h"
#include "unlearn_audit/unlearn.h"

namespace unlearn_audit {

struct PoolModel {
  ModelState model;
  SplitMask mask;
  uint64_t mask_seed = 0;
  uint64_t train_seed = 0;
  std::optional<PrivacySpend> spend;
};

// Models trained on random halves of one dataset.
struct ModelPool {
  std::vector<PoolModel> models;
  std::vector<int> arch;
  TrainConfig train;
  std::optional<DpConfig> dp;
  uint64_t base_seed = 0;

  int size() const { return static_cast<int>(models.size()); }
};

// Model i uses mask seed base_seed + i and training seed
// base_seed + kPoolTrainSeedOffset + i.
inline constexpr uint64_t kPoolTrainSeedOffset = 1'000'003;

absl::StatusOr<ModelPool> TrainModelPool(const Dataset& dataset, int num_models,
                                         const std::vector<int>& arch, const TrainConfig& train,
                                         const std::optional<DpConfig>& dp, uint64_t base_seed,
                                         int workers = 1);

struct AttackConfig {
  AttackKind kind = AttackKind::kAlira;
  int n_aug = 100;
  AugmentationScheme scheme = JitterAugmentation{0.05};
  uint64_t seed = 0;
  // Samples sharing one A-LiRA in/out shadow pair.
  int shadow_group_size = 64;
};

// The augmentation attack's shadow models. Pair g is trained on a reference
// half H of the dataset: `in` on H plus group g, `out` on H minus group g,
// both from the same training seed.
struct AliraShadowPair {
  ModelState in;
  ModelState out;
  std::vector<int64_t> group;
};

struct AliraShadows {
  std::vector<AliraShadowPair> pairs;
  // Pair index per sample id, -1 for samples not covered.
  std::vector<int> pair_of_sample;
};

absl::StatusOr<AliraShadows> TrainAliraShadows(const Dataset& dataset,
                                               absl::Span<const int64_t> sample_ids, int group_size,
                                               const std::vector<int>& arch,
                                               const TrainConfig& train,
                                               const std::optional<DpConfig>& dp, uint64_t seed,
                                               int workers = 1);

// Seed of the augmentation draw for one sample.
uint64_t AugmentationSeed(uint64_t attack_seed, int64_t sample_id);

// What the scorers need besides the target models.
struct AttackContext {
  AttackConfig config;
  // Shadows for online/offline LiRA.
  const ModelPool* reference = nullptr;
  // When set, target j never uses reference model j as a shadow.
  bool leave_one_out = true;
  // Shadows for A-LiRA.
  const AliraShadows* alira = nullptr;
};

// One score and one true membership bit per pool model for a sample.
struct SampleScores {
  int64_t sample_id = 0;
  std::vector<double> scores;
  std::vector<uint8_t> member;
};

// Scores every (sample, target model) pair. Membership bits are read from
// the target pool's masks. Fails with a coverage error naming the samples
// that lack members, non-members or shadows.
absl::StatusOr<std::vector<SampleScores>> CollectScores(const ModelPool& targets,
                                                        const AttackContext& context,
                                                        const Dataset& dataset,
                                                        absl::Span<const int64_t> sample_ids,
                                                        int workers = 1);

// Risk of a sample. `ln_ratio` is -inf when the best TPR is 0.
struct RiskRecord {
  int64_t sample_id = 0;
  double tpr = 0.0;
  double fpr = 1.0;
  double ratio = 0.0;
  double ln_ratio = 0.0;
  double fpr_floor = 0.0;

  friend bool operator==(const RiskRecord&, const RiskRecord&) = default;
};

// Greatest TPR/FPR over thresholds tau in {-inf} and the observed scores,
// with TPR = member fraction > tau and FPR = max(non-member fraction > tau,
// fpr_floor). Ties prefer larger TPR, then larger tau.
absl::StatusOr<RiskRecord> PerSampleRisk(absl::Span<const double> member_scores,
                                         absl::Span<const double> nonmember_scores,
                                         double fpr_floor);

struct RiskTable {
  // Sorted by sample id.
  std::vector<RiskRecord> records;
  std::string provenance;

  const RiskRecord* Find(int64_t sample_id) const;

  friend bool operator==(const RiskTable&, const RiskTable&) = default;
};

// Per-sample risk for `sample_ids` (all samples when empty) with the FPR
// floor set to 1 / (number of non-member models) for each sample.
absl::StatusOr<RiskTable> EstimateRiskTable(const Dataset& dataset, const ModelPool& pool,
                                            const AttackContext& context,
                                            absl::Span<const int64_t> sample_ids = {},
                                            int workers = 1);

// Per-sample risk over already collected scores, with the fpr floor of
// EstimateRiskTable. Records are sorted by sample id.
absl::StatusOr<RiskTable> RiskTableFromScores(const std::vector<SampleScores>& scores,
                                              std::string provenance);

// Removes `forget_ids` from one pool model with the configured method.
absl::StatusOr<PoolModel> UnlearnPoolModel(const ModelPool& pool, int index, const Dataset& dataset,
                                           absl::Span<const int64_t> forget_ids,
                                           const UnlearnConfig& config);

struct UnlearnOutcome {
  // Same masks as the original pool: unlearned samples keep their original
  // membership label.
  ModelPool unlearned;
  RiskTable table;
  int models_modified = 0;
};

// Applies unlearning to every model that trained on any forget id (only its
// own forget members are removed) and rescores with the original pool as
// the online/offline shadow reference.
absl::StatusOr<UnlearnOutcome> ReestimateAfterUnlearn(
    const ModelPool& pool, const UnlearnConfig& config, absl::Span<const int64_t> forget_ids,
    const Dataset& dataset, const AttackContext& context, absl::Span<const int64_t> sample_ids = {},
    int workers = 1);

// Delimited text: header, then sample_id,tpr,fpr,ratio,ln_ratio,provenance,
// fpr_floor. A -inf ln_ratio is written as "-inf".
absl::Status WriteRiskTable(const RiskTable& table, const std::string& path);
absl::StatusOr<RiskTable> ReadRiskTable(const std::string& path);

// Raw scores: sample_id,model_id,member,score.
absl::Status WriteScoreTable(absl::Span<const SampleScores> scores, const std::string& path);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_RISK_H_
