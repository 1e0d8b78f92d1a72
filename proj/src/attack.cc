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

#include "unlearn_audit/attack.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "absl/strings/str_cat.h"

namespace unlearn_audit {
namespace {

absl::Status CheckLabels(absl::Span<const double> scores, absl::Span<const uint8_t> member_labels) {
  if (scores.size() != member_labels.size()) {
    return absl::InvalidArgumentError("scores and labels differ in length");
  }
  const auto members =
      std::count_if(member_labels.begin(), member_labels.end(), [](uint8_t m) { return m != 0; });
  if (members == 0 || members == static_cast<long>(member_labels.size())) {
    return absl::InvalidArgumentError("both members and non-members are required");
  }
  return absl::OkStatus();
}

void SplitByLabel(absl::Span<const double> scores, absl::Span<const uint8_t> member_labels,
                  std::vector<double>& members, std::vector<double>& nonmembers) {
  for (size_t i = 0; i < scores.size(); ++i) {
    (member_labels[i] ? members : nonmembers).push_back(scores[i]);
  }
}

}  // namespace

absl::string_view AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kAlira:
      return "alira";
    case AttackKind::kOnline:
      return "online";
    case AttackKind::kOffline:
      return "offline";
  }
  return "unknown";
}

absl::StatusOr<AttackKind> ParseAttackKind(absl::string_view name) {
  for (AttackKind k : {AttackKind::kAlira, AttackKind::kOnline, AttackKind::kOffline}) {
    if (AttackKindName(k) == name) return k;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown attack kind '", name, "'"));
}

double LiraScore::lambda() const { return kind == AttackKind::kOffline ? value : std::exp(value); }

absl::StatusOr<double> LogitTransform(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("logit undefined at p=", p));
  }
  return std::log(p / (1.0 - p));
}

absl::StatusOr<GaussianFit> FitGaussian(absl::Span<const double> obs) {
  if (obs.size() < 2) {
    return absl::InvalidArgumentError("a Gaussian fit needs at least two observations");
  }
  double sum = 0.0;
  for (double x : obs) sum += x;
  const double n = static_cast<double>(obs.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double x : obs) ss += (x - mu) * (x - mu);
  const double var = ss / (n - 1.0);
  if (!std::isfinite(mu) || !std::isfinite(var)) {
    return absl::InvalidArgumentError("non-finite observations");
  }
  return GaussianFit{mu, std::max(var, kVarianceFloor)};
}

double LogNormalPdf(double x, const GaussianFit& fit) {
  const double d = x - fit.mu;
  return -0.5 * (std::log(2.0 * std::numbers::pi * fit.var) + d * d / fit.var);
}

double LogLikelihoodRatio(double x, const GaussianFit& in, const GaussianFit& out) {
  return LogNormalPdf(x, in) - LogNormalPdf(x, out);
}

double TrueLabelLogit(const ModelState& model, const Sample& sample) {
  const double p = ClampedTrueLabelConfidence(model, sample.features, sample.label);
  return std::log(p / (1.0 - p));
}

absl::StatusOr<AliraReference> PrepareAliraReference(const ModelState& f_in,
                                                     const ModelState& f_out, const Sample& sample,
                                                     int n_aug, const AugmentationScheme& scheme,
                                                     uint64_t seed,
                                                     const std::optional<GridLayout>& grid) {
  if (n_aug < 2) return absl::InvalidArgumentError("n_aug must be at least 2");
  for (const ModelState* m : {&f_in, &f_out}) {
    if (m->input_dim() != static_cast<int>(sample.features.size()) || sample.label < 0 ||
        sample.label >= m->num_classes()) {
      return absl::InvalidArgumentError("shadow model does not match the sample");
    }
  }
  AliraReference ref;
  absl::StatusOr<std::vector<Sample>> augmented = Augment(sample, n_aug, scheme, seed, grid);
  if (!augmented.ok()) return augmented.status();
  ref.augmented = *std::move(augmented);

  std::vector<double> obs_in, obs_out;
  obs_in.reserve(ref.augmented.size());
  obs_out.reserve(ref.augmented.size());
  for (const Sample& x : ref.augmented) {
    obs_in.push_back(TrueLabelLogit(f_in, x));
    obs_out.push_back(TrueLabelLogit(f_out, x));
  }
  absl::StatusOr<GaussianFit> in = FitGaussian(obs_in);
  if (!in.ok()) return in.status();
  absl::StatusOr<GaussianFit> out = FitGaussian(obs_out);
  if (!out.ok()) return out.status();
  ref.in = *in;
  ref.out = *out;
  return ref;
}

double MaxAugmentedLogit(const ModelState& target, const AliraReference& reference) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Sample& x : reference.augmented) {
    best = std::max(best, TrueLabelLogit(target, x));
  }
  return best;
}

LiraScore ScoreAgainstReference(const ModelState& target, const AliraReference& reference) {
  const double m = MaxAugmentedLogit(target, reference);
  return LiraScore{AttackKind::kAlira, LogLikelihoodRatio(m, reference.in, reference.out)};
}

absl::StatusOr<LiraScore> AliraScore(const ModelState& target, const ModelState& f_in,
                                     const ModelState& f_out, const Sample& sample, int n_aug,
                                     const AugmentationScheme& scheme, uint64_t seed,
                                     const std::optional<GridLayout>& grid) {
  if (target.input_dim() != static_cast<int>(sample.features.size()) || sample.label < 0 ||
      sample.label >= target.num_classes()) {
    return absl::InvalidArgumentError("target model does not match the sample");
  }
  absl::StatusOr<AliraReference> ref =
      PrepareAliraReference(f_in, f_out, sample, n_aug, scheme, seed, grid);
  if (!ref.ok()) return ref.status();
  return ScoreAgainstReference(target, *ref);
}

absl::StatusOr<LiraScore> OnlineLiraFromObservations(double target_phi,
                                                     absl::Span<const double> in_obs,
                                                     absl::Span<const double> out_obs) {
  if (in_obs.size() < 2 || out_obs.size() < 2) {
    return absl::FailedPreconditionError(
        absl::StrCat("coverage: online LiRA needs >= 2 in and >= 2 out shadows, have ",
                     in_obs.size(), " in and ", out_obs.size(), " out"));
  }
  absl::StatusOr<GaussianFit> in = FitGaussian(in_obs);
  if (!in.ok()) return in.status();
  absl::StatusOr<GaussianFit> out = FitGaussian(out_obs);
  if (!out.ok()) return out.status();
  return LiraScore{AttackKind::kOnline, LogLikelihoodRatio(target_phi, *in, *out)};
}

absl::StatusOr<LiraScore> OfflineLiraFromObservations(double target_phi,
                                                      absl::Span<const double> out_obs) {
  if (out_obs.size() < 2) {
    return absl::FailedPreconditionError(
        absl::StrCat("coverage: offline LiRA needs >= 2 out shadows, have ", out_obs.size()));
  }
  absl::StatusOr<GaussianFit> out = FitGaussian(out_obs);
  if (!out.ok()) return out.status();
  const double z = (target_phi - out->mu) / std::sqrt(out->var);
  return LiraScore{AttackKind::kOffline, 0.5 * std::erfc(-z / std::numbers::sqrt2)};
}

namespace {

absl::Status CheckShadowPool(absl::Span<const ShadowModel> pool, const Sample& sample) {
  for (const ShadowModel& shadow : pool) {
    if (sample.id < 0 || sample.id >= shadow.mask.size()) {
      return absl::InvalidArgumentError("sample id outside the shadow masks");
    }
    if (shadow.model.input_dim() != static_cast<int>(sample.features.size())) {
      return absl::InvalidArgumentError("shadow model does not match the sample");
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LiraScore> OnlineLiraScore(const ModelState& target,
                                          absl::Span<const ShadowModel> pool,
                                          const Sample& sample) {
  absl::Status valid = CheckShadowPool(pool, sample);
  if (!valid.ok()) return valid;
  std::vector<double> in_obs, out_obs;
  for (const ShadowModel& shadow : pool) {
    (shadow.mask.contains(sample.id) ? in_obs : out_obs)
        .push_back(TrueLabelLogit(shadow.model, sample));
  }
  return OnlineLiraFromObservations(TrueLabelLogit(target, sample), in_obs, out_obs);
}

absl::StatusOr<LiraScore> OfflineLiraScore(const ModelState& target,
                                           absl::Span<const ShadowModel> pool,
                                           const Sample& sample) {
  absl::Status valid = CheckShadowPool(pool, sample);
  if (!valid.ok()) return valid;
  std::vector<double> out_obs;
  for (const ShadowModel& shadow : pool) {
    if (!shadow.mask.contains(sample.id)) {
      out_obs.push_back(TrueLabelLogit(shadow.model, sample));
    }
  }
  return OfflineLiraFromObservations(TrueLabelLogit(target, sample), out_obs);
}

absl::StatusOr<double> ThresholdAtFpr(absl::Span<const double> nonmember_scores,
                                      double target_fpr) {
  if (nonmember_scores.empty()) {
    return absl::InvalidArgumentError("no non-member scores");
  }
  if (!(target_fpr > 0.0 && target_fpr <= 1.0)) {
    return absl::InvalidArgumentError("target_fpr must be in (0, 1]");
  }
  std::vector<double> sorted(nonmember_scores.begin(), nonmember_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());
  // The 1e-9 guard keeps products like 0.07 * 100 from rounding up a rank.
  int64_t rank = static_cast<int64_t>(std::ceil(target_fpr * n - 1e-9));
  rank = std::clamp<int64_t>(rank, 1, static_cast<int64_t>(sorted.size()));
  return sorted[static_cast<size_t>(rank - 1)];
}

absl::StatusOr<double> Auc(absl::Span<const double> scores,
                           absl::Span<const uint8_t> member_labels) {
  absl::Status valid = CheckLabels(scores, member_labels);
  if (!valid.ok()) return valid;
  std::vector<double> members, nonmembers;
  SplitByLabel(scores, member_labels, members, nonmembers);
  std::sort(nonmembers.begin(), nonmembers.end());
  // Twice the number of winning pairs plus the number of tied pairs.
  int64_t doubled = 0;
  for (double s : members) {
    const auto [lo, hi] = std::equal_range(nonmembers.begin(), nonmembers.end(), s);
    doubled += 2 * (lo - nonmembers.begin()) + (hi - lo);
  }
  return static_cast<double>(doubled) /
         (2.0 * static_cast<double>(members.size()) * static_cast<double>(nonmembers.size()));
}

absl::StatusOr<double> TprAtFpr(absl::Span<const double> scores,
                                absl::Span<const uint8_t> member_labels, double fpr) {
  absl::Status valid = CheckLabels(scores, member_labels);
  if (!valid.ok()) return valid;
  std::vector<double> members, nonmembers;
  SplitByLabel(scores, member_labels, members, nonmembers);
  absl::StatusOr<double> tau = ThresholdAtFpr(nonmembers, fpr);
  if (!tau.ok()) return tau.status();
  const auto hits =
      std::count_if(members.begin(), members.end(), [&](double s) { return Classify(s, *tau); });
  return static_cast<double>(hits) / static_cast<double>(members.size());
}

}  // namespace unlearn_audit
