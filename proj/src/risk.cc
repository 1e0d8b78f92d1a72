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

#include "unlearn_audit/risk.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "unlearn_audit/parallel.h"
#include "unlearn_audit/random.h"
#include "unlearn_audit/status_macros.h"

namespace unlearn_audit {
namespace {

constexpr uint64_t kAliraHalfStream = 21;
constexpr uint64_t kAliraGroupStream = 22;
constexpr uint64_t kAliraTrainStream = 23;
constexpr uint64_t kAugmentStream = 24;
constexpr uint64_t kUnlearnStream = 25;

constexpr char kRiskHeader[] = "sample_id,tpr,fpr,ratio,ln_ratio,provenance,fpr_floor";

std::vector<int64_t> AllIds(const Dataset& dataset) {
  std::vector<int64_t> ids(static_cast<size_t>(dataset.size()));
  std::iota(ids.begin(), ids.end(), int64_t{0});
  return ids;
}

absl::Status CoverageError(absl::string_view what, const std::vector<int64_t>& ids) {
  constexpr size_t kShown = 20;
  std::vector<int64_t> shown(ids.begin(), ids.begin() + std::min(ids.size(), kShown));
  return absl::FailedPreconditionError(absl::StrCat("coverage: ", ids.size(), " sample(s) ", what,
                                                    ": ", absl::StrJoin(shown, " "),
                                                    ids.size() > kShown ? " ..." : ""));
}

absl::StatusOr<ModelState> TrainOne(const Dataset& dataset, const SplitMask& mask,
                                    const std::vector<int>& arch, TrainConfig train, uint64_t seed,
                                    const std::optional<DpConfig>& dp,
                                    std::optional<PrivacySpend>* spend) {
  train.seed = seed;
  ASSIGN_OR_RETURN(ModelState init, InitModel(arch, seed));
  if (dp.has_value()) {
    ASSIGN_OR_RETURN(DpTrainResult result, TrainDp(init, dataset, mask, train, *dp));
    if (spend != nullptr) *spend = result.spend;
    return std::move(result.model);
  }
  return Train(init, dataset, mask, train);
}

}  // namespace

absl::StatusOr<ModelPool> TrainModelPool(const Dataset& dataset, int num_models,
                                         const std::vector<int>& arch, const TrainConfig& train,
                                         const std::optional<DpConfig>& dp, uint64_t base_seed,
                                         int workers) {
  if (num_models < 4) return absl::InvalidArgumentError("a pool needs at least 4 models");
  if (num_models % 2 != 0) {
    return absl::InvalidArgumentError("the pool size must be even");
  }
  ModelPool pool;
  pool.arch = arch;
  pool.train = train;
  pool.dp = dp;
  pool.base_seed = base_seed;
  pool.models.resize(static_cast<size_t>(num_models));
  RETURN_IF_ERROR(ParallelFor(num_models, workers, [&](int64_t i) -> absl::Status {
    PoolModel& pm = pool.models[static_cast<size_t>(i)];
    pm.mask_seed = base_seed + static_cast<uint64_t>(i);
    pm.train_seed = base_seed + kPoolTrainSeedOffset + static_cast<uint64_t>(i);
    ASSIGN_OR_RETURN(pm.mask, RandomHalfSplit(dataset.size(), pm.mask_seed));
    ASSIGN_OR_RETURN(pm.model,
                     TrainOne(dataset, pm.mask, arch, train, pm.train_seed, dp, &pm.spend));
    return absl::OkStatus();
  }));
  return pool;
}

absl::StatusOr<AliraShadows> TrainAliraShadows(const Dataset& dataset,
                                               absl::Span<const int64_t> sample_ids, int group_size,
                                               const std::vector<int>& arch,
                                               const TrainConfig& train,
                                               const std::optional<DpConfig>& dp, uint64_t seed,
                                               int workers) {
  if (group_size <= 0) return absl::InvalidArgumentError("shadow_group_size must be positive");
  if (sample_ids.empty()) return absl::InvalidArgumentError("no samples to cover");
  ASSIGN_OR_RETURN(SplitMask half,
                   RandomHalfSplit(dataset.size(), DeriveSeed(seed, kAliraHalfStream)));

  std::vector<int64_t> order(sample_ids.begin(), sample_ids.end());
  for (int64_t id : order) {
    if (id < 0 || id >= dataset.size()) {
      return absl::InvalidArgumentError(absl::StrCat("unknown sample id ", id));
    }
  }
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  Rng rng = MakeRng(seed, kAliraGroupStream);
  std::shuffle(order.begin(), order.end(), rng);

  AliraShadows shadows;
  shadows.pair_of_sample.assign(static_cast<size_t>(dataset.size()), -1);
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(group_size)) {
    AliraShadowPair pair;
    const size_t end = std::min(order.size(), start + static_cast<size_t>(group_size));
    pair.group.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                      order.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(pair.group.begin(), pair.group.end());
    for (int64_t id : pair.group) {
      shadows.pair_of_sample[static_cast<size_t>(id)] = static_cast<int>(shadows.pairs.size());
    }
    shadows.pairs.push_back(std::move(pair));
  }

  const int64_t jobs = 2 * static_cast<int64_t>(shadows.pairs.size());
  RETURN_IF_ERROR(ParallelFor(jobs, workers, [&](int64_t job) -> absl::Status {
    AliraShadowPair& pair = shadows.pairs[static_cast<size_t>(job / 2)];
    const bool include = job % 2 == 0;
    SplitMask mask = half;
    for (int64_t id : pair.group) mask.set(id, include);
    // Both halves of a pair share the training seed.
    const uint64_t train_seed = DeriveSeed(seed, kAliraTrainStream + 2 * (job / 2));
    ASSIGN_OR_RETURN(ModelState model,
                     TrainOne(dataset, mask, arch, train, train_seed, dp, nullptr));
    (include ? pair.in : pair.out) = std::move(model);
    return absl::OkStatus();
  }));
  return shadows;
}

uint64_t AugmentationSeed(uint64_t attack_seed, int64_t sample_id) {
  return DeriveSeed(attack_seed, kAugmentStream + (static_cast<uint64_t>(sample_id) << 8));
}

absl::StatusOr<std::vector<SampleScores>> CollectScores(const ModelPool& targets,
                                                        const AttackContext& context,
                                                        const Dataset& dataset,
                                                        absl::Span<const int64_t> sample_ids,
                                                        int workers) {
  const AttackConfig& attack = context.config;
  const int m = targets.size();
  if (m == 0) return absl::InvalidArgumentError("empty target pool");
  if (sample_ids.empty()) return absl::InvalidArgumentError("no samples to score");
  for (const PoolModel& pm : targets.models) {
    if (pm.mask.size() != dataset.size()) {
      return absl::InvalidArgumentError("pool masks do not match the dataset");
    }
  }
  for (int64_t id : sample_ids) {
    if (id < 0 || id >= dataset.size()) {
      return absl::InvalidArgumentError(absl::StrCat("unknown sample id ", id));
    }
  }
  const size_t n = sample_ids.size();

  // Every sample needs members and non-members among the targets.
  std::vector<int64_t> thin;
  for (int64_t id : sample_ids) {
    int members = 0;
    for (const PoolModel& pm : targets.models) members += pm.mask.contains(id);
    if (members < 2 || m - members < 2) thin.push_back(id);
  }
  if (!thin.empty()) {
    return CoverageError("are members or non-members of fewer than 2 pool models", thin);
  }

  const bool lira = attack.kind != AttackKind::kAlira;
  const ModelPool* reference = context.reference;
  if (lira) {
    if (reference == nullptr) {
      return absl::InvalidArgumentError("online/offline LiRA needs a shadow pool");
    }
    if (context.leave_one_out && reference->size() != m) {
      return absl::InvalidArgumentError(
          "leave-one-out scoring needs a reference pool as large as the targets");
    }
  } else if (context.alira == nullptr) {
    return absl::InvalidArgumentError("A-LiRA needs trained shadow pairs");
  }

  // phi of every (model, sample) pair, row-major by model.
  std::vector<std::vector<double>> target_phi, reference_phi;
  if (lira) {
    const auto fill = [&](const ModelPool& pool, std::vector<std::vector<double>>& phi) {
      phi.assign(static_cast<size_t>(pool.size()), std::vector<double>(n));
      return ParallelFor(pool.size(), workers, [&](int64_t r) {
        for (size_t k = 0; k < n; ++k) {
          phi[static_cast<size_t>(r)][k] =
              TrueLabelLogit(pool.models[static_cast<size_t>(r)].model, dataset.at(sample_ids[k]));
        }
        return absl::OkStatus();
      });
    };
    RETURN_IF_ERROR(fill(targets, target_phi));
    if (reference == &targets) {
      reference_phi = target_phi;
    } else {
      RETURN_IF_ERROR(fill(*reference, reference_phi));
    }
  }

  std::vector<SampleScores> out(n);
  std::vector<absl::Status> per_sample(n);
  RETURN_IF_ERROR(ParallelFor(static_cast<int64_t>(n), workers, [&](int64_t k) {
    const int64_t id = sample_ids[static_cast<size_t>(k)];
    SampleScores& row = out[static_cast<size_t>(k)];
    row.sample_id = id;
    row.scores.resize(static_cast<size_t>(m));
    row.member.resize(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
      row.member[static_cast<size_t>(j)] = targets.models[static_cast<size_t>(j)].mask.contains(id);
    }
    absl::Status& status = per_sample[static_cast<size_t>(k)];
    if (!lira) {
      const int pair_index = context.alira->pair_of_sample.size() > static_cast<size_t>(id)
                                 ? context.alira->pair_of_sample[static_cast<size_t>(id)]
                                 : -1;
      if (pair_index < 0) {
        status = absl::FailedPreconditionError("no shadow pair");
        return absl::OkStatus();
      }
      const AliraShadowPair& pair = context.alira->pairs[static_cast<size_t>(pair_index)];
      absl::StatusOr<AliraReference> ref =
          PrepareAliraReference(pair.in, pair.out, dataset.at(id), attack.n_aug, attack.scheme,
                                AugmentationSeed(attack.seed, id), dataset.grid);
      if (!ref.ok()) return ref.status();
      for (int j = 0; j < m; ++j) {
        row.scores[static_cast<size_t>(j)] =
            ScoreAgainstReference(targets.models[static_cast<size_t>(j)].model, *ref).value;
      }
      return absl::OkStatus();
    }
    std::vector<double> in_obs, out_obs;
    for (int j = 0; j < m; ++j) {
      in_obs.clear();
      out_obs.clear();
      for (int r = 0; r < reference->size(); ++r) {
        if (context.leave_one_out && r == j) continue;
        const double phi = reference_phi[static_cast<size_t>(r)][static_cast<size_t>(k)];
        (reference->models[static_cast<size_t>(r)].mask.contains(id) ? in_obs : out_obs)
            .push_back(phi);
      }
      const double target = target_phi[static_cast<size_t>(j)][static_cast<size_t>(k)];
      absl::StatusOr<LiraScore> score = attack.kind == AttackKind::kOnline
                                            ? OnlineLiraFromObservations(target, in_obs, out_obs)
                                            : OfflineLiraFromObservations(target, out_obs);
      if (!score.ok()) {
        status = score.status();
        return absl::OkStatus();
      }
      row.scores[static_cast<size_t>(j)] = score->value;
    }
    return absl::OkStatus();
  }));

  std::vector<int64_t> uncovered;
  for (size_t k = 0; k < n; ++k) {
    if (per_sample[k].code() == absl::StatusCode::kFailedPrecondition) {
      uncovered.push_back(sample_ids[k]);
    } else if (!per_sample[k].ok()) {
      return per_sample[k];
    }
  }
  if (!uncovered.empty()) return CoverageError("lack the shadows the attack needs", uncovered);
  return out;
}

absl::StatusOr<RiskRecord> PerSampleRisk(absl::Span<const double> member_scores,
                                         absl::Span<const double> nonmember_scores,
                                         double fpr_floor) {
  if (member_scores.empty() || nonmember_scores.empty()) {
    return absl::InvalidArgumentError("per-sample risk needs member and non-member scores");
  }
  if (!(fpr_floor > 0.0 && fpr_floor < 1.0)) {
    return absl::InvalidArgumentError("fpr_floor must be in (0, 1)");
  }
  std::vector<double> members(member_scores.begin(), member_scores.end());
  std::vector<double> nonmembers(nonmember_scores.begin(), nonmember_scores.end());
  std::sort(members.begin(), members.end());
  std::sort(nonmembers.begin(), nonmembers.end());
  std::vector<double> candidates;
  candidates.reserve(members.size() + nonmembers.size() + 1);
  candidates.push_back(-std::numeric_limits<double>::infinity());
  candidates.insert(candidates.end(), members.begin(), members.end());
  candidates.insert(candidates.end(), nonmembers.begin(), nonmembers.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double nm = static_cast<double>(members.size());
  const double nn = static_cast<double>(nonmembers.size());
  RiskRecord best;
  best.ratio = -1.0;
  best.fpr_floor = fpr_floor;
  // Ascending tau, so on a full tie the later candidate has the larger tau.
  for (double tau : candidates) {
    const auto above = [tau](const std::vector<double>& v) {
      return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), tau));
    };
    const double tpr = above(members) / nm;
    const double fpr = std::max(above(nonmembers) / nn, fpr_floor);
    const double ratio = tpr / fpr;
    // Ratios of equal rationals can differ in the last bits; treat them as
    // ties so the tie-break rule decides.
    const double slack = 1e-12 * std::max(std::abs(ratio), std::abs(best.ratio));
    if (ratio > best.ratio + slack || (ratio >= best.ratio - slack && tpr >= best.tpr)) {
      best.tpr = tpr;
      best.fpr = fpr;
      best.ratio = ratio;
    }
  }
  best.ln_ratio =
      best.ratio > 0.0 ? std::log(best.ratio) : -std::numeric_limits<double>::infinity();
  return best;
}

const RiskRecord* RiskTable::Find(int64_t sample_id) const {
  auto it = std::lower_bound(records.begin(), records.end(), sample_id,
                             [](const RiskRecord& r, int64_t id) { return r.sample_id < id; });
  if (it == records.end() || it->sample_id != sample_id) return nullptr;
  return &*it;
}

absl::StatusOr<RiskTable> RiskTableFromScores(const std::vector<SampleScores>& scores,
                                              std::string provenance) {
  RiskTable table;
  table.provenance = std::move(provenance);
  table.records.reserve(scores.size());
  for (const SampleScores& row : scores) {
    std::vector<double> members, nonmembers;
    for (size_t j = 0; j < row.scores.size(); ++j) {
      (row.member[j] ? members : nonmembers).push_back(row.scores[j]);
    }
    const double floor = 1.0 / static_cast<double>(std::max<size_t>(nonmembers.size(), 2));
    ASSIGN_OR_RETURN(RiskRecord record, PerSampleRisk(members, nonmembers, floor));
    record.sample_id = row.sample_id;
    table.records.push_back(record);
  }
  std::sort(table.records.begin(), table.records.end(),
            [](const RiskRecord& a, const RiskRecord& b) { return a.sample_id < b.sample_id; });
  return table;
}

namespace {

std::vector<int64_t> ResolveIds(const Dataset& dataset, absl::Span<const int64_t> ids) {
  if (ids.empty()) return AllIds(dataset);
  std::vector<int64_t> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

absl::StatusOr<RiskTable> EstimateRiskTable(const Dataset& dataset, const ModelPool& pool,
                                            const AttackContext& context,
                                            absl::Span<const int64_t> sample_ids, int workers) {
  const std::vector<int64_t> ids = ResolveIds(dataset, sample_ids);
  ASSIGN_OR_RETURN(std::vector<SampleScores> scores,
                   CollectScores(pool, context, dataset, ids, workers));
  return RiskTableFromScores(
      scores, absl::StrCat("original;", AttackKindName(context.config.kind), ";m=", pool.size()));
}

absl::StatusOr<PoolModel> UnlearnPoolModel(const ModelPool& pool, int index, const Dataset& dataset,
                                           absl::Span<const int64_t> forget_ids,
                                           const UnlearnConfig& config) {
  const PoolModel& original = pool.models[static_cast<size_t>(index)];
  SplitMask forget(dataset.size());
  for (int64_t id : forget_ids) {
    if (original.mask.contains(id)) forget.set(id, true);
  }
  if (forget.count() == 0) return original;
  SplitMask retain = original.mask;
  for (int64_t id : forget.members()) retain.set(id, false);

  PoolModel result = original;
  UnlearnConfig local = config;
  local.seed = DeriveSeed(config.seed, kUnlearnStream + static_cast<uint64_t>(index));
  switch (config.method) {
    case UnlearnMethod::kRetrain: {
      TrainConfig train = pool.train;
      train.seed = original.train_seed;
      if (pool.dp.has_value()) {
        ASSIGN_OR_RETURN(DpTrainResult r,
                         RetrainExactDp(dataset, retain, pool.arch, train, *pool.dp));
        result.model = std::move(r.model);
        result.spend = r.spend;
      } else {
        ASSIGN_OR_RETURN(result.model, RetrainExact(dataset, retain, pool.arch, train));
      }
      break;
    }
    case UnlearnMethod::kFinetune: {
      ASSIGN_OR_RETURN(result.model, UnlearnFinetune(original.model, dataset, retain, local));
      break;
    }
    case UnlearnMethod::kGradAscent: {
      ASSIGN_OR_RETURN(result.model,
                       UnlearnGradAscent(original.model, dataset, forget, retain, local));
      break;
    }
    case UnlearnMethod::kFisherDampen: {
      ASSIGN_OR_RETURN(result.model,
                       UnlearnFisherDampen(original.model, dataset, forget, retain, local));
      break;
    }
    case UnlearnMethod::kSaliency: {
      ASSIGN_OR_RETURN(result.model, UnlearnSaliency(original.model, dataset, forget, local));
      break;
    }
  }
  return result;
}

absl::StatusOr<UnlearnOutcome> ReestimateAfterUnlearn(
    const ModelPool& pool, const UnlearnConfig& config, absl::Span<const int64_t> forget_ids,
    const Dataset& dataset, const AttackContext& context, absl::Span<const int64_t> sample_ids,
    int workers) {
  if (forget_ids.empty()) return absl::InvalidArgumentError("forget set is empty");
  for (int64_t id : forget_ids) {
    if (id < 0 || id >= dataset.size()) {
      return absl::InvalidArgumentError(absl::StrCat("unknown forget id ", id));
    }
  }
  RETURN_IF_ERROR(ValidateUnlearnConfig(config));

  UnlearnOutcome outcome;
  outcome.unlearned = pool;
  RETURN_IF_ERROR(ParallelFor(pool.size(), workers, [&](int64_t j) -> absl::Status {
    ASSIGN_OR_RETURN(outcome.unlearned.models[static_cast<size_t>(j)],
                     UnlearnPoolModel(pool, static_cast<int>(j), dataset, forget_ids, config));
    return absl::OkStatus();
  }));
  for (int j = 0; j < pool.size(); ++j) {
    if (!(outcome.unlearned.models[static_cast<size_t>(j)].model ==
          pool.models[static_cast<size_t>(j)].model)) {
      ++outcome.models_modified;
    }
  }

  AttackContext rescoring = context;
  rescoring.reference = &pool;
  const std::vector<int64_t> ids = ResolveIds(dataset, sample_ids);
  ASSIGN_OR_RETURN(std::vector<SampleScores> scores,
                   CollectScores(outcome.unlearned, rescoring, dataset, ids, workers));
  const std::string provenance =
      absl::StrCat("unlearn:", UnlearnMethodName(config.method), ";",
                   AttackKindName(context.config.kind), ";m=", pool.size());
  ASSIGN_OR_RETURN(outcome.table, RiskTableFromScores(scores, provenance));
  return outcome;
}

absl::Status WriteRiskTable(const RiskTable& table, const std::string& path) {
  if (table.provenance.find_first_of(",\n") != std::string::npos) {
    return absl::InvalidArgumentError("provenance must not contain commas or newlines");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << kRiskHeader << '\n';
  for (const RiskRecord& r : table.records) {
    out << r.sample_id << ',' << FormatDouble(r.tpr) << ',' << FormatDouble(r.fpr) << ','
        << FormatDouble(r.ratio) << ',' << FormatDouble(r.ln_ratio) << ',' << table.provenance
        << ',' << FormatDouble(r.fpr_floor) << '\n';
  }
  out.flush();
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<RiskTable> ReadRiskTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  if (!std::getline(in, line) || absl::StripAsciiWhitespace(line) != kRiskHeader) {
    return absl::DataLossError(absl::StrCat(path, ": missing risk table header"));
  }
  RiskTable table;
  int64_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    std::vector<absl::string_view> f = absl::StrSplit(line, ',');
    if (f.size() != 7) {
      return absl::DataLossError(absl::StrCat(path, ": row ", row, ": expected 7 fields"));
    }
    RiskRecord r;
    absl::StatusOr<int64_t> id = ParseInt(f[0]);
    absl::StatusOr<double> tpr = ParseDouble(f[1]);
    absl::StatusOr<double> fpr = ParseDouble(f[2]);
    absl::StatusOr<double> ratio = ParseDouble(f[3]);
    absl::StatusOr<double> ln_ratio = ParseDouble(f[4]);
    absl::StatusOr<double> floor = ParseDouble(f[6]);
    for (const absl::Status& s : {id.status(), tpr.status(), fpr.status(), ratio.status(),
                                  ln_ratio.status(), floor.status()}) {
      if (!s.ok()) return absl::DataLossError(absl::StrCat(path, ": row ", row, ": ", s.message()));
    }
    r.sample_id = *id;
    r.tpr = *tpr;
    r.fpr = *fpr;
    r.ratio = *ratio;
    r.ln_ratio = *ln_ratio;
    r.fpr_floor = *floor;
    table.provenance = std::string(f[5]);
    if (!table.records.empty() && table.records.back().sample_id >= r.sample_id) {
      return absl::DataLossError(absl::StrCat(path, ": row ", row, ": ids not ascending"));
    }
    table.records.push_back(r);
  }
  return table;
}

absl::Status WriteScoreTable(absl::Span<const SampleScores> scores, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << "sample_id,model_id,member,score\n";
  for (const SampleScores& row : scores) {
    for (size_t j = 0; j < row.scores.size(); ++j) {
      out << row.sample_id << ',' << j << ',' << int{row.member[j]} << ','
          << FormatDouble(row.scores[j]) << '\n';
    }
  }
  out.flush();
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

}  // namespace unlearn_audit
