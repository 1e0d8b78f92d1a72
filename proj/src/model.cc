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

#include "unlearn_audit/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "absl/strings/str_cat.h"
#include "unlearn_audit/random.h"

namespace unlearn_audit {
namespace {

// Streams of the training seed.
constexpr uint64_t kShuffleStream = 1;
constexpr uint64_t kNoiseStream = 2;

absl::Status ValidateArch(const std::vector<int>& arch) {
  if (arch.size() < 2) {
    return absl::InvalidArgumentError("arch needs at least input and output widths");
  }
  for (int w : arch) {
    if (w <= 0) return absl::InvalidArgumentError("layer widths must be positive");
  }
  return absl::OkStatus();
}

int64_t ParamCount(const std::vector<int>& arch) {
  int64_t total = 0;
  for (size_t l = 0; l + 1 < arch.size(); ++l) {
    total += int64_t{arch[l]} * arch[l + 1] + arch[l + 1];
  }
  return total;
}

// Forward pass that keeps every layer's post-activation values.
// acts[0] is the input, acts.back() the logits.
void ForwardAll(const ModelState& model, absl::Span<const double> features,
                std::vector<std::vector<double>>& acts) {
  const auto& arch = model.arch();
  const auto& p = model.params();
  const int layers = model.num_layers();
  acts.resize(static_cast<size_t>(layers) + 1);
  acts[0].assign(features.begin(), features.end());
  for (int l = 0; l < layers; ++l) {
    const int in = arch[static_cast<size_t>(l)];
    const int out = arch[static_cast<size_t>(l) + 1];
    const double* w = p.data() + model.weight_offset(l);
    const double* b = p.data() + model.bias_offset(l);
    const std::vector<double>& a = acts[static_cast<size_t>(l)];
    std::vector<double>& z = acts[static_cast<size_t>(l) + 1];
    z.assign(b, b + out);
    for (int i = 0; i < in; ++i) {
      const double ai = a[static_cast<size_t>(i)];
      if (ai == 0.0) continue;
      const double* row = w + static_cast<int64_t>(i) * out;
      for (int j = 0; j < out; ++j) z[static_cast<size_t>(j)] += ai * row[j];
    }
    if (l + 1 < layers) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
    }
  }
}

double LogSumExp(absl::Span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

absl::Status ValidateTraining(const ModelState& model, const Dataset& dataset,
                              const SplitMask& mask, const TrainConfig& config) {
  if (model.input_dim() != dataset.feature_dim || model.num_classes() != dataset.num_classes) {
    return absl::InvalidArgumentError(absl::StrCat("model arch does not match dataset (",
                                                   dataset.feature_dim, " features, ",
                                                   dataset.num_classes, " classes)"));
  }
  if (mask.size() != dataset.size()) {
    return absl::InvalidArgumentError("mask length differs from dataset size");
  }
  const int64_t members = mask.count();
  if (members == 0) return absl::InvalidArgumentError("member set is empty");
  if (!(config.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (config.epochs < 0) return absl::InvalidArgumentError("epochs must be >= 0");
  if (config.batch_size <= 0 || config.batch_size > members) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch_size ", config.batch_size, " must be in [1, ", members, "]"));
  }
  if (config.weight_decay < 0.0) {
    return absl::InvalidArgumentError("weight_decay must be >= 0");
  }
  return absl::OkStatus();
}

// Shared SGD loop. When `dp` is set, per-example gradients are clipped and
// the batch sum is noised before averaging.
absl::StatusOr<ModelState> RunSgd(const ModelState& model, const Dataset& dataset,
                                  const SplitMask& mask, const TrainConfig& config,
                                  const DpConfig* dp, TrainLog* log) {
  absl::Status valid = ValidateTraining(model, dataset, mask, config);
  if (!valid.ok()) return valid;

  ModelState state = model;
  std::vector<int64_t> members = mask.members();
  TrainLog local;
  local.member_count = static_cast<int64_t>(members.size());

  Rng shuffle_rng = MakeRng(config.seed, kShuffleStream);
  Rng noise_rng = MakeRng(config.seed, kNoiseStream);
  std::normal_distribution<double> normal(0.0, 1.0);

  const size_t num_params = static_cast<size_t>(state.num_params());
  std::vector<double> sum(num_params);
  std::vector<double> grad(num_params);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(members.begin(), members.end(), shuffle_rng);
    for (size_t start = 0; start < members.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(members.size(), start + static_cast<size_t>(config.batch_size));
      std::fill(sum.begin(), sum.end(), 0.0);
      for (size_t k = start; k < end; ++k) {
        const Sample& s = dataset.at(members[k]);
        SampleLossGradient(state, s.features, s.label, absl::MakeSpan(grad));
        if (dp != nullptr) ClipToNorm(absl::MakeSpan(grad), dp->clip_norm);
        for (size_t i = 0; i < num_params; ++i) sum[i] += grad[i];
      }
      if (dp != nullptr) {
        const double stddev = dp->noise_multiplier * dp->clip_norm;
        for (size_t i = 0; i < num_params; ++i) sum[i] += stddev * normal(noise_rng);
      }
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::vector<double>& p = state.mutable_params();
      for (size_t i = 0; i < num_params; ++i) {
        double g = sum[i] * inv_batch;
        if (config.weight_decay > 0.0 && state.is_weight(static_cast<int64_t>(i))) {
          g += config.weight_decay * p[i];
        }
        p[i] -= config.learning_rate * g;
      }
      ++local.steps;
      local.examples_processed += static_cast<int64_t>(end - start);
    }
  }
  if (!state.AllFinite()) {
    return absl::InternalError("training diverged to non-finite parameters");
  }
  if (log != nullptr) *log = local;
  return state;
}

}  // namespace

absl::StatusOr<ModelState> ModelState::Create(std::vector<int> arch, std::vector<double> params) {
  absl::Status valid = ValidateArch(arch);
  if (!valid.ok()) return valid;
  if (static_cast<int64_t>(params.size()) != ParamCount(arch)) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", ParamCount(arch), " parameters, got ", params.size()));
  }
  ModelState state;
  state.arch_ = std::move(arch);
  state.params_ = std::move(params);
  int64_t offset = 0;
  for (size_t l = 0; l + 1 < state.arch_.size(); ++l) {
    state.offsets_.push_back(offset);
    offset += int64_t{state.arch_[l]} * state.arch_[l + 1] + state.arch_[l + 1];
  }
  return state;
}

absl::StatusOr<ModelState> ModelState::Zeros(std::vector<int> arch) {
  absl::Status valid = ValidateArch(arch);
  if (!valid.ok()) return valid;
  std::vector<double> params(static_cast<size_t>(ParamCount(arch)), 0.0);
  return Create(std::move(arch), std::move(params));
}

bool ModelState::is_weight(int64_t index) const {
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (index >= weight_offset(l)) return index < bias_offset(l);
  }
  return false;
}

bool ModelState::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

absl::StatusOr<ModelState> InitModel(std::vector<int> arch, uint64_t seed) {
  absl::StatusOr<ModelState> zeros = ModelState::Zeros(std::move(arch));
  if (!zeros.ok()) return zeros.status();
  ModelState state = *std::move(zeros);
  Rng rng = MakeRng(seed);
  for (int l = 0; l < state.num_layers(); ++l) {
    const int in = state.arch()[static_cast<size_t>(l)];
    const int out = state.arch()[static_cast<size_t>(l) + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    double* w = state.mutable_params().data() + state.weight_offset(l);
    for (int64_t k = 0; k < int64_t{in} * out; ++k) w[k] = uniform(rng);
  }
  return state;
}

int64_t StepsFor(const TrainConfig& config, int64_t members) {
  if (config.batch_size <= 0 || members <= 0) return 0;
  const int64_t per_epoch = (members + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

absl::StatusOr<ModelState> Train(const ModelState& model, const Dataset& dataset,
                                 const SplitMask& mask, const TrainConfig& config, TrainLog* log) {
  return RunSgd(model, dataset, mask, config, nullptr, log);
}

absl::StatusOr<DpTrainResult> TrainDp(const ModelState& model, const Dataset& dataset,
                                      const SplitMask& mask, const TrainConfig& config,
                                      const DpConfig& dp, TrainLog* log) {
  if (!(dp.clip_norm > 0.0) || !(dp.noise_multiplier > 0.0)) {
    return absl::InvalidArgumentError("clip_norm and noise_multiplier must be positive");
  }
  if (!(dp.delta > 0.0 && dp.delta < 1.0)) {
    return absl::InvalidArgumentError("delta must be in (0, 1)");
  }
  TrainLog local;
  absl::StatusOr<ModelState> trained = RunSgd(model, dataset, mask, config, &dp, &local);
  if (!trained.ok()) return trained.status();
  absl::StatusOr<double> epsilon = AccountEpsilon(dp.noise_multiplier, local.steps, dp.delta);
  if (!epsilon.ok()) return epsilon.status();
  if (log != nullptr) *log = local;
  return DpTrainResult{*std::move(trained), PrivacySpend{*epsilon, dp.delta}};
}

double ClipToNorm(absl::Span<double> grad, double clip_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= clip_norm) return 1.0;
  const double scale = clip_norm / norm;
  for (double& g : grad) g *= scale;
  return scale;
}

std::vector<double> ForwardLogits(const ModelState& model, absl::Span<const double> features) {
  thread_local std::vector<std::vector<double>> acts;
  ForwardAll(model, features, acts);
  return acts.back();
}

std::vector<double> Softmax(absl::Span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

absl::StatusOr<std::vector<double>> PredictProba(const ModelState& model, const Sample& sample) {
  if (static_cast<int>(sample.features.size()) != model.input_dim()) {
    return absl::InvalidArgumentError(absl::StrCat("sample has ", sample.features.size(),
                                                   " features, model expects ", model.input_dim()));
  }
  return Softmax(ForwardLogits(model, sample.features));
}

absl::StatusOr<double> ConfidenceOfTrueLabel(const ModelState& model, const Sample& sample) {
  if (sample.label < 0 || sample.label >= model.num_classes()) {
    return absl::InvalidArgumentError("label outside the model's classes");
  }
  absl::StatusOr<std::vector<double>> proba = PredictProba(model, sample);
  if (!proba.ok()) return proba.status();
  return std::clamp((*proba)[static_cast<size_t>(sample.label)], kMinConfidence,
                    1.0 - kMinConfidence);
}

double ClampedTrueLabelConfidence(const ModelState& model, absl::Span<const double> features,
                                  int label) {
  thread_local std::vector<std::vector<double>> acts;
  ForwardAll(model, features, acts);
  const std::vector<double>& z = acts.back();
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double p = std::exp(z[static_cast<size_t>(label)] - m) / s;
  return std::clamp(p, kMinConfidence, 1.0 - kMinConfidence);
}

double SampleLossGradient(const ModelState& model, absl::Span<const double> features, int label,
                          absl::Span<double> grad) {
  thread_local std::vector<std::vector<double>> acts;
  thread_local std::vector<double> delta;
  thread_local std::vector<double> prev;
  ForwardAll(model, features, acts);

  const auto& arch = model.arch();
  const auto& p = model.params();
  const std::vector<double>& logits = acts.back();
  const double lse = LogSumExp(logits);
  const double loss = lse - logits[static_cast<size_t>(label)];

  delta.resize(logits.size());
  for (size_t j = 0; j < logits.size(); ++j) delta[j] = std::exp(logits[j] - lse);
  delta[static_cast<size_t>(label)] -= 1.0;

  for (int l = model.num_layers() - 1; l >= 0; --l) {
    const int in = arch[static_cast<size_t>(l)];
    const int out = arch[static_cast<size_t>(l) + 1];
    const std::vector<double>& a = acts[static_cast<size_t>(l)];
    double* gw = grad.data() + model.weight_offset(l);
    double* gb = grad.data() + model.bias_offset(l);
    for (int i = 0; i < in; ++i) {
      const double ai = a[static_cast<size_t>(i)];
      double* row = gw + static_cast<int64_t>(i) * out;
      for (int j = 0; j < out; ++j) row[j] = ai * delta[static_cast<size_t>(j)];
    }
    for (int j = 0; j < out; ++j) gb[j] = delta[static_cast<size_t>(j)];
    if (l == 0) break;
    const double* w = p.data() + model.weight_offset(l);
    prev.assign(static_cast<size_t>(in), 0.0);
    for (int i = 0; i < in; ++i) {
      if (a[static_cast<size_t>(i)] <= 0.0) continue;
      const double* row = w + static_cast<int64_t>(i) * out;
      double s = 0.0;
      for (int j = 0; j < out; ++j) s += row[j] * delta[static_cast<size_t>(j)];
      prev[static_cast<size_t>(i)] = s;
    }
    delta.swap(prev);
  }
  return loss;
}

double SampleLoss(const ModelState& model, absl::Span<const double> features, int label) {
  const std::vector<double> z = ForwardLogits(model, features);
  return LogSumExp(z) - z[static_cast<size_t>(label)];
}

double MeanLoss(const ModelState& model, const Dataset& dataset, absl::Span<const int64_t> ids) {
  if (ids.empty()) return 0.0;
  double total = 0.0;
  for (int64_t id : ids) {
    const Sample& s = dataset.at(id);
    total += SampleLoss(model, s.features, s.label);
  }
  return total / static_cast<double>(ids.size());
}

double Accuracy(const ModelState& model, const Dataset& dataset, absl::Span<const int64_t> ids) {
  if (ids.empty()) return 0.0;
  int64_t correct = 0;
  for (int64_t id : ids) {
    const Sample& s = dataset.at(id);
    const std::vector<double> z = ForwardLogits(model, s.features);
    const auto best = std::max_element(z.begin(), z.end()) - z.begin();
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

namespace {

constexpr char kModelMagic[8] = {'U', 'A', 'M', 'O', 'D', 'E', 'L', '1'};

static_assert(std::endian::native == std::endian::little,
              "model files are written in host order, which must be little endian");

template <typename T>
void Put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool Get(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace

absl::Status SaveModel(const StoredModel& stored, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out.write(kModelMagic, sizeof(kModelMagic));
  Put<uint32_t>(out, static_cast<uint32_t>(stored.config_hash.size()));
  out.write(stored.config_hash.data(), static_cast<std::streamsize>(stored.config_hash.size()));
  Put<uint64_t>(out, stored.train_seed);
  Put<uint8_t>(out, stored.spend.has_value() ? 1 : 0);
  Put<double>(out, stored.spend ? stored.spend->epsilon : 0.0);
  Put<double>(out, stored.spend ? stored.spend->delta : 0.0);
  const auto& arch = stored.model.arch();
  Put<uint32_t>(out, static_cast<uint32_t>(arch.size()));
  for (int w : arch) Put<uint32_t>(out, static_cast<uint32_t>(w));
  const auto& params = stored.model.params();
  Put<uint64_t>(out, params.size());
  for (double v : params) Put<double>(out, v);
  out.flush();
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<StoredModel> LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  const auto corrupt = [&path](absl::string_view what) {
    return absl::DataLossError(absl::StrCat(path, ": ", what));
  };
  char magic[sizeof(kModelMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    return corrupt("not a model file");
  }
  StoredModel stored;
  uint32_t hash_len = 0;
  if (!Get(in, hash_len) || hash_len > 4096) return corrupt("bad hash length");
  stored.config_hash.resize(hash_len);
  if (!in.read(stored.config_hash.data(), hash_len)) return corrupt("truncated hash");
  uint8_t has_spend = 0;
  double epsilon = 0.0, delta = 0.0;
  if (!Get(in, stored.train_seed) || !Get(in, has_spend) || !Get(in, epsilon) || !Get(in, delta)) {
    return corrupt("truncated header");
  }
  if (has_spend) stored.spend = PrivacySpend{epsilon, delta};
  uint32_t layers = 0;
  if (!Get(in, layers) || layers < 2 || layers > 1024) return corrupt("bad arch");
  std::vector<int> arch(layers);
  for (int& w : arch) {
    uint32_t v = 0;
    if (!Get(in, v)) return corrupt("truncated arch");
    w = static_cast<int>(v);
  }
  uint64_t count = 0;
  if (!Get(in, count) || count > (uint64_t{1} << 32)) return corrupt("bad parameter count");
  std::vector<double> params(count);
  for (double& v : params) {
    if (!Get(in, v)) return corrupt("truncated parameters");
  }
  absl::StatusOr<ModelState> model = ModelState::Create(std::move(arch), std::move(params));
  if (!model.ok()) return corrupt(model.status().message());
  stored.model = *std::move(model);
  return stored;
}

}  // namespace unlearn_audit
