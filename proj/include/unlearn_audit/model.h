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

#ifndef UNLEARN_AUDIT_MODEL_H_
#define UNLEARN_AUDIT_MODEL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "unlearn_audit/data.h"

namespace unlearn_audit {

// Confidences are clamped into [kMinConfidence, 1 - kMinConfidence] before
// they reach the logit transform.
inline constexpr double kMinConfidence = 1e-7;

// Fully connected rectifier network with a softmax head. Parameters live in
// one flat vector, layer by layer: the (in x out) row-major weight matrix
// followed by the `out` biases.
class ModelState {
 public:
  ModelState() = default;

  // `arch` lists layer widths from input to num_classes.
  static absl::StatusOr<ModelState> Create(std::vector<int> arch, std::vector<double> params);
  static absl::StatusOr<ModelState> Zeros(std::vector<int> arch);

  const std::vector<int>& arch() const { return arch_; }
  int num_layers() const { return static_cast<int>(arch_.size()) - 1; }
  int input_dim() const { return arch_.front(); }
  int num_classes() const { return arch_.back(); }
  int64_t num_params() const { return static_cast<int64_t>(params_.size()); }

  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }

  int64_t weight_offset(int layer) const { return offsets_[static_cast<size_t>(layer)]; }
  int64_t bias_offset(int layer) const {
    return offsets_[static_cast<size_t>(layer)] +
           int64_t{arch_[static_cast<size_t>(layer)]} * arch_[static_cast<size_t>(layer) + 1];
  }
  double weight(int layer, int in, int out) const {
    return params_[static_cast<size_t>(weight_offset(layer) +
                                       int64_t{in} * arch_[static_cast<size_t>(layer) + 1] + out)];
  }
  double bias(int layer, int out) const {
    return params_[static_cast<size_t>(bias_offset(layer) + out)];
  }
  // True for parameter indices that belong to a weight matrix.
  bool is_weight(int64_t index) const;

  bool AllFinite() const;

  friend bool operator==(const ModelState& a, const ModelState& b) {
    return a.arch_ == b.arch_ && a.params_ == b.params_;
  }

 private:
  std::vector<int> arch_;
  std::vector<double> params_;
  std::vector<int64_t> offsets_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 100;
  int batch_size = 32;
  double weight_decay = 0.0;
  uint64_t seed = 0;
};

// DP-SGD parameters. The number of steps follows from epochs and batches.
struct DpConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 1.0;
  double delta = 1e-5;
};

struct PrivacySpend {
  double epsilon = 0.0;
  double delta = 0.0;

  friend bool operator==(const PrivacySpend&, const PrivacySpend&) = default;
};

// Bookkeeping filled in by the trainers.
struct TrainLog {
  int64_t member_count = 0;
  int64_t steps = 0;
  int64_t examples_processed = 0;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; zero biases.
absl::StatusOr<ModelState> InitModel(std::vector<int> arch, uint64_t seed);

// Number of optimizer steps `Train` performs for `members` examples.
int64_t StepsFor(const TrainConfig& config, int64_t members);

// Mini-batch SGD on the cross-entropy loss over the mask's members.
absl::StatusOr<ModelState> Train(const ModelState& model, const Dataset& dataset,
                                 const SplitMask& mask, const TrainConfig& config,
                                 TrainLog* log = nullptr);

struct DpTrainResult {
  ModelState model;
  PrivacySpend spend;
};

// DP-SGD: per-example clipping to `clip_norm`, Gaussian noise of standard
// deviation noise_multiplier * clip_norm on the clipped sum, then division
// by the batch size. Noise is drawn layer-major, coordinate-major.
absl::StatusOr<DpTrainResult> TrainDp(const ModelState& model, const Dataset& dataset,
                                      const SplitMask& mask, const TrainConfig& config,
                                      const DpConfig& dp, TrainLog* log = nullptr);

// Scales `grad` in place so its L2 norm is at most `clip_norm`. Returns the
// scale factor applied (1 when the gradient was already small enough).
double ClipToNorm(absl::Span<double> grad, double clip_norm);

// epsilon = min over alpha > 1 of T*alpha/(2 sigma^2) + ln(1/delta)/(alpha-1),
// the Renyi composition of T Gaussian mechanisms without subsampling.
absl::StatusOr<double> AccountEpsilon(double noise_multiplier, int64_t steps, double delta);

// Smallest noise multiplier for which AccountEpsilon(.., steps, delta) is at
// most `epsilon`.
absl::StatusOr<double> NoiseMultiplierForEpsilon(double epsilon, int64_t steps, double delta);

// Raw output-layer activations. Caller guarantees the input dimension.
std::vector<double> ForwardLogits(const ModelState& model, absl::Span<const double> features);

// Softmax of the logits (max-subtracted).
std::vector<double> Softmax(absl::Span<const double> logits);

absl::StatusOr<std::vector<double>> PredictProba(const ModelState& model, const Sample& sample);

// Probability of `sample.label`, clamped into [1e-7, 1 - 1e-7].
absl::StatusOr<double> ConfidenceOfTrueLabel(const ModelState& model, const Sample& sample);

// Unchecked variant of ConfidenceOfTrueLabel for hot loops.
double ClampedTrueLabelConfidence(const ModelState& model, absl::Span<const double> features,
                                  int label);

// Cross-entropy of one example; writes d(loss)/d(params) into `grad`
// (overwriting it). `grad` must have num_params() entries.
double SampleLossGradient(const ModelState& model, absl::Span<const double> features, int label,
                          absl::Span<double> grad);

// Cross-entropy of one example, no gradient.
double SampleLoss(const ModelState& model, absl::Span<const double> features, int label);

// Mean cross-entropy over `ids`.
double MeanLoss(const ModelState& model, const Dataset& dataset, absl::Span<const int64_t> ids);

// Fraction of `ids` whose argmax prediction equals the label.
double Accuracy(const ModelState& model, const Dataset& dataset, absl::Span<const int64_t> ids);

// A model as persisted on disk.
struct StoredModel {
  ModelState model;
  uint64_t train_seed = 0;
  std::optional<PrivacySpend> spend;
  std::string config_hash;
};

// Binary layout, little endian: magic "UAMODEL1", config hash (u32 length +
// bytes), train seed (u64), spend flag (u8) + epsilon + delta (f64), layer
// count (u32) + widths (u32), parameter count (u64) + parameters (f64).
absl::Status SaveModel(const StoredModel& stored, const std::string& path);
absl::StatusOr<StoredModel> LoadModel(const std::string& path);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_MODEL_H_
