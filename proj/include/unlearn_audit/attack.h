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

#ifndef UNLEARN_AUDIT_ATTACK_H_
#define UNLEARN_AUDIT_ATTACK_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "absl/types/span.h"
#include "unlearn_audit/data.h"
#include "unlearn_audit/model.h"

namespace unlearn_audit {

// Floor applied to fitted variances so saturated models still give a proper
// density.
inline constexpr double kVarianceFloor = 1e-6;

enum class AttackKind { kAlira, kOnline, kOffline };

absl::string_view AttackKindName(AttackKind kind);
absl::StatusOr<AttackKind> ParseAttackKind(absl::string_view name);

struct GaussianFit {
  double mu = 0.0;
  double var = kVarianceFloor;
};

// A membership score; larger means more member-like.
//
// For the likelihood-ratio attacks (A-LiRA, online) `value` holds ln(Lambda)
// so that extreme ratios neither overflow nor underflow; ordering and
// thresholds are unchanged by the log. For offline LiRA `value` is the
// one-sided out-distribution CDF at the observed logit, in [0, 1].
struct LiraScore {
  AttackKind kind = AttackKind::kAlira;
  double value = 0.0;

  double lambda() const;
};

// phi(p) = log(p / (1 - p)); p must lie strictly inside (0, 1).
absl::StatusOr<double> LogitTransform(double p);

// Mean and unbiased variance, floored at kVarianceFloor.
absl::StatusOr<GaussianFit> FitGaussian(absl::Span<const double> obs);

double LogNormalPdf(double x, const GaussianFit& fit);

// ln(pdf(x | in) / pdf(x | out)).
double LogLikelihoodRatio(double x, const GaussianFit& in, const GaussianFit& out);

// phi of the clamped true-label confidence.
double TrueLabelLogit(const ModelState& model, const Sample& sample);

// The per-sample half of the augmentation attack that does not depend on the
// target: the shared augmentation draw and the two reference fits.
struct AliraReference {
  std::vector<Sample> augmented;
  GaussianFit in;
  GaussianFit out;
};

absl::StatusOr<AliraReference> PrepareAliraReference(
    const ModelState& f_in, const ModelState& f_out, const Sample& sample, int n_aug,
    const AugmentationScheme& scheme, uint64_t seed,
    const std::optional<GridLayout>& grid = std::nullopt);

// Largest phi of the target's true-label confidence over the augmentations.
double MaxAugmentedLogit(const ModelState& target, const AliraReference& reference);

LiraScore ScoreAgainstReference(const ModelState& target, const AliraReference& reference);

// Augmentation-based LiRA. One augmentation draw is pushed through f_in,
// f_out and the target; Gaussians are fitted to the f_in and f_out phi
// values and Lambda is their density ratio at the target's maximum phi.
absl::StatusOr<LiraScore> AliraScore(const ModelState& target, const ModelState& f_in,
                                     const ModelState& f_out, const Sample& sample, int n_aug,
                                     const AugmentationScheme& scheme, uint64_t seed,
                                     const std::optional<GridLayout>& grid = std::nullopt);

struct ShadowModel {
  ModelState model;
  SplitMask mask;
};

// Online LiRA from precomputed phi observations.
absl::StatusOr<LiraScore> OnlineLiraFromObservations(double target_phi,
                                                     absl::Span<const double> in_obs,
                                                     absl::Span<const double> out_obs);

// Offline LiRA from precomputed phi observations: Phi((x - mu) / sigma), the
// probability mass of the out distribution below the observed logit.
absl::StatusOr<LiraScore> OfflineLiraFromObservations(double target_phi,
                                                      absl::Span<const double> out_obs);

// Online LiRA: Gaussians over shadows that did / did not train on `sample`,
// evaluated at the target's own phi.
absl::StatusOr<LiraScore> OnlineLiraScore(const ModelState& target,
                                          absl::Span<const ShadowModel> pool, const Sample& sample);

// Offline LiRA using only the shadows that excluded `sample`.
absl::StatusOr<LiraScore> OfflineLiraScore(const ModelState& target,
                                           absl::Span<const ShadowModel> pool,
                                           const Sample& sample);

// The ceil(target_fpr * N)-th largest non-member score. With the strict rule
// score > tau, at most a target_fpr fraction of non-members is flagged.
absl::StatusOr<double> ThresholdAtFpr(absl::Span<const double> nonmember_scores, double target_fpr);

inline bool Classify(double score, double tau) { return score > tau; }

// P(member score > non-member score) with ties counted as one half.
absl::StatusOr<double> Auc(absl::Span<const double> scores,
                           absl::Span<const uint8_t> member_labels);

// Member fraction above the ThresholdAtFpr threshold of the non-members.
absl::StatusOr<double> TprAtFpr(absl::Span<const double> scores,
                                absl::Span<const uint8_t> member_labels, double fpr);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_ATTACK_H_
