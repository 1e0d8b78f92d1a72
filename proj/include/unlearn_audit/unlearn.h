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

#ifndef UNLEARN_AUDIT_UNLEARN_H_
#define UNLEARN_AUDIT_UNLEARN_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "unlearn_audit/data.h"
#include "unlearn_audit/model.h"

namespace unlearn_audit {

// The approximate methods are simplified stand-ins for published unlearning
// algorithms: finetune and grad_ascent are generic baselines, fisher_dampen
// follows selective synaptic dampening, saliency follows saliency-masked
// random relabelling. None reproduces the original hyperparameters.
enum class UnlearnMethod { kRetrain, kFinetune, kGradAscent, kFisherDampen, kSaliency };

absl::string_view UnlearnMethodName(UnlearnMethod method);
absl::StatusOr<UnlearnMethod> ParseUnlearnMethod(absl::string_view name);

struct UnlearnConfig {
  UnlearnMethod method = UnlearnMethod::kFinetune;
  int steps = 50;
  double learning_rate = 0.05;
  int batch_size = 32;
  // fisher_dampen: a parameter is selected when F_forget > alpha * F_full and
  // then scaled by min(1, beta * F_full / F_forget).
  double alpha = 10.0;
  double beta = 1.0;
  // saliency: fraction of parameters updated.
  double gamma = 0.1;
  // grad_ascent: follow the ascent with `steps` finetuning steps on the
  // retain set.
  bool repair = false;
  uint64_t seed = 0;
};

absl::Status ValidateUnlearnConfig(const UnlearnConfig& config);

// Fresh initialization from `train.seed` plus full training on the retain set.
absl::StatusOr<ModelState> RetrainExact(const Dataset& dataset, const SplitMask& retain_mask,
                                        const std::vector<int>& arch, const TrainConfig& train,
                                        TrainLog* log = nullptr);

absl::StatusOr<DpTrainResult> RetrainExactDp(const Dataset& dataset, const SplitMask& retain_mask,
                                             const std::vector<int>& arch, const TrainConfig& train,
                                             const DpConfig& dp, TrainLog* log = nullptr);

// `steps` SGD steps on retain-set mini-batches, starting from `model`.
absl::StatusOr<ModelState> UnlearnFinetune(const ModelState& model, const Dataset& dataset,
                                           const SplitMask& retain_mask,
                                           const UnlearnConfig& config);

// `steps` ascent steps on the forget-set cross-entropy. With config.repair
// set, continues with UnlearnFinetune on `retain_mask`.
absl::StatusOr<ModelState> UnlearnGradAscent(const ModelState& model, const Dataset& dataset,
                                             const SplitMask& forget_mask,
                                             const SplitMask& retain_mask,
                                             const UnlearnConfig& config);

// Diagonal empirical Fisher: mean over `mask` members of squared per-example
// gradients.
std::vector<double> DiagonalFisher(const ModelState& model, const Dataset& dataset,
                                   const SplitMask& mask);

// Applies the dampening rule coordinate-wise and returns the new parameters.
std::vector<double> DampenParameters(absl::Span<const double> params,
                                     absl::Span<const double> fisher_forget,
                                     absl::Span<const double> fisher_full, double alpha,
                                     double beta);

// F_full is computed over forget and retain members together.
absl::StatusOr<ModelState> UnlearnFisherDampen(const ModelState& model, const Dataset& dataset,
                                               const SplitMask& forget_mask,
                                               const SplitMask& retain_mask,
                                               const UnlearnConfig& config);

// Indices of the ceil(gamma * P) largest |grad| entries; ties go to the lower
// index. Returned in ascending index order.
std::vector<int64_t> SaliencyMask(absl::Span<const double> grad, double gamma);

// Updates only the salient parameters, training the forget samples towards
// uniformly drawn wrong labels.
absl::StatusOr<ModelState> UnlearnSaliency(const ModelState& model, const Dataset& dataset,
                                           const SplitMask& forget_mask,
                                           const UnlearnConfig& config);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_UNLEARN_H_
