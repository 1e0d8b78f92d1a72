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

#include "unlearn_audit/bench.h"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "unlearn_audit/random.h"
#include "unlearn_audit/status_macros.h"

namespace unlearn_audit {
namespace {

constexpr uint64_t kSubsetStream = 31;
constexpr uint64_t kOnlineStream = 32;
constexpr uint64_t kOfflineStream = 33;
constexpr uint64_t kAliraStream = 34;
constexpr uint64_t kCalibrationStream = 35;

void Flatten(const std::vector<SampleScores>& rows, std::vector<double>& scores,
             std::vector<uint8_t>& labels) {
  scores.clear();
  labels.clear();
  for (const SampleScores& row : rows) {
    scores.insert(scores.end(), row.scores.begin(), row.scores.end());
    labels.insert(labels.end(), row.member.begin(), row.member.end());
  }
}

}  // namespace

absl::StatusOr<std::vector<BenchRow>> RunAttackBench(const Dataset& dataset,
                                                     const ModelPool& targets,
                                                     const AttackConfig& attack,
                                                     const BenchConfig& bench, int workers) {
  if (bench.num_samples < 0) return absl::InvalidArgumentError("num_samples must be >= 0");
  if (bench.online_shadows < 4 || bench.offline_shadows < 4) {
    return absl::InvalidArgumentError("shadow pools need at least 4 models");
  }

  std::vector<int64_t> ids(static_cast<size_t>(dataset.size()));
  std::iota(ids.begin(), ids.end(), int64_t{0});
  if (bench.num_samples > 0 && bench.num_samples < dataset.size()) {
    Rng rng = MakeRng(bench.seed, kSubsetStream);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<size_t>(bench.num_samples));
    std::sort(ids.begin(), ids.end());
  }

  std::optional<ModelPool> calibration;
  if (bench.calibration_models > 0) {
    ASSIGN_OR_RETURN(
        calibration,
        TrainModelPool(dataset, bench.calibration_models, targets.arch, targets.train, targets.dp,
                       DeriveSeed(bench.seed, kCalibrationStream), workers));
  }

  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (AttackKind kind : {AttackKind::kAlira, AttackKind::kOnline, AttackKind::kOffline}) {
    BenchRow row;
    row.kind = kind;
    const auto start = Clock::now();

    AttackContext context;
    context.config = attack;
    context.config.kind = kind;
    context.leave_one_out = false;
    std::optional<ModelPool> shadow_pool;
    std::optional<AliraShadows> alira;
    if (kind == AttackKind::kAlira) {
      ASSIGN_OR_RETURN(alira, TrainAliraShadows(dataset, ids, attack.shadow_group_size,
                                                targets.arch, targets.train, targets.dp,
                                                DeriveSeed(bench.seed, kAliraStream), workers));
      context.alira = &*alira;
      row.shadow_models_trained = 2 * static_cast<int>(alira->pairs.size());
    } else {
      const bool online = kind == AttackKind::kOnline;
      const int count = online ? bench.online_shadows : bench.offline_shadows;
      ASSIGN_OR_RETURN(
          shadow_pool,
          TrainModelPool(dataset, count, targets.arch, targets.train, targets.dp,
                         DeriveSeed(bench.seed, online ? kOnlineStream : kOfflineStream), workers));
      context.reference = &*shadow_pool;
      row.shadow_models_trained = count;
    }
    ASSIGN_OR_RETURN(std::vector<SampleScores> scored,
                     CollectScores(targets, context, dataset, ids, workers));
    std::vector<double> scores;
    std::vector<uint8_t> labels;
    Flatten(scored, scores, labels);
    ASSIGN_OR_RETURN(row.auc, Auc(scores, labels));
    ASSIGN_OR_RETURN(row.tpr_at_fpr, TprAtFpr(scores, labels, bench.fpr));
    row.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    row.scored_pairs = static_cast<int64_t>(scores.size());

    if (calibration.has_value()) {
      ASSIGN_OR_RETURN(std::vector<SampleScores> calibrated,
                       CollectScores(*calibration, context, dataset, ids, workers));
      std::vector<double> cal_scores;
      std::vector<uint8_t> cal_labels;
      Flatten(calibrated, cal_scores, cal_labels);
      std::vector<double> nonmembers;
      for (size_t i = 0; i < cal_scores.size(); ++i) {
        if (!cal_labels[i]) nonmembers.push_back(cal_scores[i]);
      }
      ASSIGN_OR_RETURN(double tau, ThresholdAtFpr(nonmembers, bench.fpr));
      int64_t hits = 0, members = 0;
      for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        ++members;
        hits += Classify(scores[i], tau);
      }
      row.tpr_at_fpr_calibrated = static_cast<double>(hits) / static_cast<double>(members);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace unlearn_audit
