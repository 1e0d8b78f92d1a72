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

#include "unlearn_audit/unlearn.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "unlearn_audit/random.h"

namespace unlearn_audit {
namespace {

constexpr uint64_t kBatchStream = 11;
constexpr uint64_t kRelabelStream = 12;
constexpr uint64_t kRepairStream = 13;

// Hands out mini-batches of `ids`, reshuffling after every full pass.
class BatchCycler {
 public:
  BatchCycler(std::vector<int64_t> ids, int batch_size, uint64_t seed, uint64_t stream)
      : ids_(std::move(ids)),
        batch_size_(static_cast<size_t>(std::max(1, batch_size))),
        rng_(MakeRng(seed, stream)) {
    std::shuffle(ids_.begin(), ids_.end(), rng_);
  }

  std::vector<int64_t> Next() {
    std::vector<int64_t> batch;
    const size_t take = std::min(batch_size_, ids_.size());
    while (batch.size() < take) {
      if (pos_ == ids_.size()) {
        std::shuffle(ids_.begin(), ids_.end(), rng_);
        pos_ = 0;
      }
      batch.push_back(ids_[pos_++]);
    }
    return batch;
  }

 private:
  std::vector<int64_t> ids_;
  size_t batch_size_;
  size_t pos_ = 0;
  Rng rng_;
};

// Mean gradient of the cross-entropy over `ids`, using `labels` when given
// (indexed like `ids`) instead of the dataset labels.
void MeanGradient(const ModelState& model, const Dataset& dataset, absl::Span<const int64_t> ids,
                  const std::vector<int>* labels, std::vector<double>& mean) {
  const size_t p = static_cast<size_t>(model.num_params());
  mean.assign(p, 0.0);
  std::vector<double> grad(p);
  for (size_t k = 0; k < ids.size(); ++k) {
    const Sample& s = dataset.at(ids[k]);
    const int label = labels != nullptr ? (*labels)[k] : s.label;
    SampleLossGradient(model, s.features, label, absl::MakeSpan(grad));
    for (size_t i = 0; i < p; ++i) mean[i] += grad[i];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : mean) v *= inv;
}

absl::Status CheckMask(const Dataset& dataset, const SplitMask& mask, absl::string_view what) {
  if (mask.size() != dataset.size()) {
    return absl::InvalidArgumentError(absl::StrCat(what, " mask length differs from dataset size"));
  }
  if (mask.count() == 0) {
    return absl::InvalidArgumentError(absl::StrCat(what, " set is empty"));
  }
  return absl::OkStatus();
}

absl::Status CheckModel(const ModelState& model, const Dataset& dataset) {
  if (model.input_dim() != dataset.feature_dim || model.num_classes() != dataset.num_classes) {
    return absl::InvalidArgumentError("model arch does not match dataset");
  }
  return absl::OkStatus();
}

absl::StatusOr<ModelState> Finished(ModelState state) {
  if (!state.AllFinite()) {
    return absl::InternalError("unlearning produced non-finite parameters");
  }
  return state;
}

}  // namespace

absl::string_view UnlearnMethodName(UnlearnMethod method) {
  switch (method) {
    case UnlearnMethod::kRetrain:
      return "retrain";
    case UnlearnMethod::kFinetune:
      return "finetune";
    case UnlearnMethod::kGradAscent:
      return "grad_ascent";
    case UnlearnMethod::kFisherDampen:
      return "fisher_dampen";
    case UnlearnMethod::kSaliency:
      return "saliency";
  }
  return "unknown";
}

absl::StatusOr<UnlearnMethod> ParseUnlearnMethod(absl::string_view name) {
  for (UnlearnMethod m :
       {UnlearnMethod::kRetrain, UnlearnMethod::kFinetune, UnlearnMethod::kGradAscent,
        UnlearnMethod::kFisherDampen, UnlearnMethod::kSaliency}) {
    if (UnlearnMethodName(m) == name) return m;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown unlearning method '", name, "'"));
}

absl::Status ValidateUnlearnConfig(const UnlearnConfig& config) {
  if (config.steps < 0) return absl::InvalidArgumentError("steps must be >= 0");
  if (!(config.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (config.batch_size <= 0) return absl::InvalidArgumentError("batch_size must be positive");
  if (!(config.alpha > 0.0)) return absl::InvalidArgumentError("alpha must be positive");
  if (!(config.beta > 0.0 && config.beta <= 1.0)) {
    return absl::InvalidArgumentError("beta must be in (0, 1]");
  }
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    return absl::InvalidArgumentError("gamma must be in (0, 1]");
  }
  return absl::OkStatus();
}

absl::StatusOr<ModelState> RetrainExact(const Dataset& dataset, const SplitMask& retain_mask,
                                        const std::vector<int>& arch, const TrainConfig& train,
                                        TrainLog* log) {
  absl::Status valid = CheckMask(dataset, retain_mask, "retain");
  if (!valid.ok()) return valid;
  absl::StatusOr<ModelState> init = InitModel(arch, train.seed);
  if (!init.ok()) return init.status();
  return Train(*init, dataset, retain_mask, train, log);
}

absl::StatusOr<DpTrainResult> RetrainExactDp(const Dataset& dataset, const SplitMask& retain_mask,
                                             const std::vector<int>& arch, const TrainConfig& train,
                                             const DpConfig& dp, TrainLog* log) {
  absl::Status valid = CheckMask(dataset, retain_mask, "retain");
  if (!valid.ok()) return valid;
  absl::StatusOr<ModelState> init = InitModel(arch, train.seed);
  if (!init.ok()) return init.status();
  return TrainDp(*init, dataset, retain_mask, train, dp, log);
}

absl::StatusOr<ModelState> UnlearnFinetune(const ModelState& model, const Dataset& dataset,
                                           const SplitMask& retain_mask,
                                           const UnlearnConfig& config) {
  absl::Status valid = ValidateUnlearnConfig(config);
  if (valid.ok()) valid = CheckModel(model, dataset);
  if (valid.ok()) valid = CheckMask(dataset, retain_mask, "retain");
  if (!valid.ok()) return valid;

  ModelState state = model;
  BatchCycler batches(retain_mask.members(), config.batch_size, config.seed, kBatchStream);
  std::vector<double> grad;
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<int64_t> batch = batches.Next();
    MeanGradient(state, dataset, batch, nullptr, grad);
    std::vector<double>& p = state.mutable_params();
    for (size_t i = 0; i < p.size(); ++i) p[i] -= config.learning_rate * grad[i];
  }
  return Finished(std::move(state));
}

absl::StatusOr<ModelState> UnlearnGradAscent(const ModelState& model, const Dataset& dataset,
                                             const SplitMask& forget_mask,
                                             const SplitMask& retain_mask,
                                             const UnlearnConfig& config) {
  absl::Status valid = ValidateUnlearnConfig(config);
  if (valid.ok()) valid = CheckModel(model, dataset);
  if (valid.ok()) valid = CheckMask(dataset, forget_mask, "forget");
  if (!valid.ok()) return valid;

  ModelState state = model;
  BatchCycler batches(forget_mask.members(), config.batch_size, config.seed, kBatchStream);
  std::vector<double> grad;
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<int64_t> batch = batches.Next();
    MeanGradient(state, dataset, batch, nullptr, grad);
    std::vector<double>& p = state.mutable_params();
    for (size_t i = 0; i < p.size(); ++i) p[i] += config.learning_rate * grad[i];
  }
  if (!state.AllFinite()) {
    return absl::InternalError("gradient ascent produced non-finite parameters");
  }
  if (config.repair && config.steps > 0) {
    UnlearnConfig repair = config;
    repair.seed = config.seed ^ kRepairStream;
    return UnlearnFinetune(state, dataset, retain_mask, repair);
  }
  return state;
}

std::vector<double> DiagonalFisher(const ModelState& model, const Dataset& dataset,
                                   const SplitMask& mask) {
  const size_t p = static_cast<size_t>(model.num_params());
  std::vector<double> fisher(p, 0.0);
  std::vector<double> grad(p);
  const std::vector<int64_t> ids = mask.members();
  if (ids.empty()) return fisher;
  for (int64_t id : ids) {
    const Sample& s = dataset.at(id);
    SampleLossGradient(model, s.features, s.label, absl::MakeSpan(grad));
    for (size_t i = 0; i < p; ++i) fisher[i] += grad[i] * grad[i];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& v : fisher) v *= inv;
  return fisher;
}

std::vector<double> DampenParameters(absl::Span<const double> params,
                                     absl::Span<const double> fisher_forget,
                                     absl::Span<const double> fisher_full, double alpha,
                                     double beta) {
  std::vector<double> out(params.begin(), params.end());
  for (size_t i = 0; i < out.size(); ++i) {
    if (fisher_forget[i] > alpha * fisher_full[i]) {
      out[i] *= std::min(1.0, beta * fisher_full[i] / fisher_forget[i]);
    }
  }
  return out;
}

absl::StatusOr<ModelState> UnlearnFisherDampen(const ModelState& model, const Dataset& dataset,
                                               const SplitMask& forget_mask,
                                               const SplitMask& retain_mask,
                                               const UnlearnConfig& config) {
  absl::Status valid = ValidateUnlearnConfig(config);
  if (valid.ok()) valid = CheckModel(model, dataset);
  if (valid.ok()) valid = CheckMask(dataset, forget_mask, "forget");
  if (valid.ok()) valid = CheckMask(dataset, retain_mask, "retain");
  if (!valid.ok()) return valid;

  SplitMask full = retain_mask;
  for (int64_t id : forget_mask.members()) full.set(id, true);
  const std::vector<double> f_forget = DiagonalFisher(model, dataset, forget_mask);
  const std::vector<double> f_full = DiagonalFisher(model, dataset, full);
  ModelState state = model;
  state.mutable_params() =
      DampenParameters(model.params(), f_forget, f_full, config.alpha, config.beta);
  return Finished(std::move(state));
}

std::vector<int64_t> SaliencyMask(absl::Span<const double> grad, double gamma) {
  const int64_t total = static_cast<int64_t>(grad.size());
  const int64_t keep = std::min<int64_t>(
      total, static_cast<int64_t>(std::ceil(gamma * static_cast<double>(total) - 1e-9)));
  std::vector<int64_t> order(static_cast<size_t>(total));
  std::iota(order.begin(), order.end(), int64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return std::abs(grad[static_cast<size_t>(a)]) > std::abs(grad[static_cast<size_t>(b)]);
  });
  order.resize(static_cast<size_t>(std::max<int64_t>(keep, 0)));
  std::sort(order.begin(), order.end());
  return order;
}

absl::StatusOr<ModelState> UnlearnSaliency(const ModelState& model, const Dataset& dataset,
                                           const SplitMask& forget_mask,
                                           const UnlearnConfig& config) {
  absl::Status valid = ValidateUnlearnConfig(config);
  if (valid.ok()) valid = CheckModel(model, dataset);
  if (valid.ok()) valid = CheckMask(dataset, forget_mask, "forget");
  if (!valid.ok()) return valid;
  if (dataset.num_classes < 2) {
    return absl::InvalidArgumentError("random relabelling needs at least two classes");
  }
  if (config.steps == 0) return model;

  const std::vector<int64_t> forget = forget_mask.members();
  std::vector<double> grad;
  MeanGradient(model, dataset, forget, nullptr, grad);
  const std::vector<int64_t> salient = SaliencyMask(grad, config.gamma);

  // One wrong label per forget sample, indexed by position in `forget`.
  Rng relabel_rng = MakeRng(config.seed, kRelabelStream);
  std::uniform_int_distribution<int> any_label(0, dataset.num_classes - 1);
  std::vector<int> wrong(dataset.samples.size(), 0);
  for (int64_t id : forget) {
    int label = 0;
    do {
      label = any_label(relabel_rng);
    } while (label == dataset.at(id).label);
    wrong[static_cast<size_t>(id)] = label;
  }

  ModelState state = model;
  BatchCycler batches(forget, config.batch_size, config.seed, kBatchStream);
  std::vector<int> batch_labels;
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<int64_t> batch = batches.Next();
    batch_labels.clear();
    for (int64_t id : batch) batch_labels.push_back(wrong[static_cast<size_t>(id)]);
    MeanGradient(state, dataset, batch, &batch_labels, grad);
    std::vector<double>& p = state.mutable_params();
    for (int64_t i : salient) {
      p[static_cast<size_t>(i)] -= config.learning_rate * grad[static_cast<size_t>(i)];
    }
  }
  return Finished(std::move(state));
}

}  // namespace unlearn_audit
