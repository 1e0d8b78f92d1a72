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

#include "unlearn_audit/pipeline.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "unlearn_audit/bench.h"
#include "unlearn_audit/random.h"
#include "unlearn_audit/status_macros.h"

namespace unlearn_audit {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kAliraShadowStream = 1;
constexpr size_t kShortHash = 16;

absl::Status PipelineError(absl::string_view message) {
  return absl::FailedPreconditionError(absl::StrCat("pipeline: ", message));
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << text;
  if (!out) return absl::InternalError(absl::StrCat("write failed for ", path));
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

absl::Status EnsureDir(const std::string& path) {
  std::error_code error;
  fs::create_directories(path, error);
  if (error)
    return absl::InternalError(absl::StrCat("cannot create ", path, ": ", error.message()));
  return absl::OkStatus();
}

std::string ModelFile(int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "model-%03d.bin", index);
  return name;
}

std::string PairFile(int index, bool in) {
  char name[32];
  std::snprintf(name, sizeof(name), "pair-%03d-%s.bin", index, in ? "in" : "out");
  return name;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines = absl::StrSplit(text, '\n', absl::SkipEmpty());
  return lines;
}

// One after-table of the unlearning sweep.
struct SweepPoint {
  UnlearnMethod method;
  Direction direction;
  double k;

  auto Key() const {
    return std::make_tuple(static_cast<int>(method), static_cast<int>(direction), k);
  }
};

}  // namespace

absl::string_view StageName(Stage stage) {
  switch (stage) {
    case Stage::kGenData:
      return "gen-data";
    case Stage::kTrainPool:
      return "train-pool";
    case Stage::kAttackBench:
      return "attack-bench";
    case Stage::kRisk:
      return "risk";
    case Stage::kUnlearn:
      return "unlearn";
    case Stage::kAudit:
      return "audit";
  }
  return "unknown";
}

absl::StatusOr<Stage> ParseStage(absl::string_view name) {
  for (Stage stage : AllStages()) {
    if (StageName(stage) == name) return stage;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown stage '", name, "'"));
}

const std::vector<Stage>& AllStages() {
  static const std::vector<Stage> kStages = {Stage::kGenData,     Stage::kTrainPool,
                                             Stage::kAttackBench, Stage::kRisk,
                                             Stage::kUnlearn,     Stage::kAudit};
  return kStages;
}

std::vector<Stage> Prerequisites(Stage stage) {
  switch (stage) {
    case Stage::kGenData:
      return {};
    case Stage::kTrainPool:
      return {Stage::kGenData};
    case Stage::kAttackBench:
    case Stage::kRisk:
      return {Stage::kTrainPool};
    case Stage::kUnlearn:
      return {Stage::kRisk};
    case Stage::kAudit:
      return {Stage::kRisk, Stage::kUnlearn};
  }
  return {};
}

namespace {

std::set<Stage> TransitivePrerequisites(Stage stage) {
  std::set<Stage> out;
  std::vector<Stage> todo = Prerequisites(stage);
  while (!todo.empty()) {
    Stage next = todo.back();
    todo.pop_back();
    if (out.insert(next).second) {
      for (Stage s : Prerequisites(next)) todo.push_back(s);
    }
  }
  return out;
}

// Reads the dataset artifact and checks it against the config.
absl::StatusOr<Dataset> LoadDatasetArtifact(const ExperimentConfig& config,
                                            const std::string& path) {
  ASSIGN_OR_RETURN(Dataset dataset, LoadDelimited(path, config.dataset.num_classes));
  dataset.grid = config.dataset.grid;
  return dataset;
}

absl::StatusOr<ModelPool> LoadPool(const ExperimentConfig& config, const Dataset& dataset,
                                   const std::optional<DpConfig>& dp, const std::string& dir,
                                   const std::string& hash) {
  ASSIGN_OR_RETURN(std::string text, ReadText((fs::path(dir) / "masks.csv").string()));
  std::vector<std::string> lines = Lines(text);
  if (lines.empty()) return absl::DataLossError("empty pool mask file");
  ModelPool pool;
  pool.arch = config.Arch();
  pool.train = config.model.train;
  pool.dp = dp;
  pool.base_seed = config.pool.base_seed;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = absl::StrSplit(lines[i], ',');
    if (f.size() != 4) return absl::DataLossError(absl::StrCat("bad pool row ", i));
    PoolModel pm;
    ASSIGN_OR_RETURN(int64_t id, ParseInt(f[0]));
    ASSIGN_OR_RETURN(int64_t mask_seed, ParseInt(f[1]));
    ASSIGN_OR_RETURN(int64_t train_seed, ParseInt(f[2]));
    if (id != static_cast<int64_t>(i - 1)) return absl::DataLossError("pool rows out of order");
    pm.mask_seed = static_cast<uint64_t>(mask_seed);
    pm.train_seed = static_cast<uint64_t>(train_seed);
    ASSIGN_OR_RETURN(pm.mask, SplitMask::FromString(f[3]));
    if (pm.mask.size() != dataset.size()) return absl::DataLossError("pool mask size mismatch");
    ASSIGN_OR_RETURN(StoredModel stored,
                     LoadModel((fs::path(dir) / ModelFile(static_cast<int>(id))).string()));
    if (stored.config_hash != hash) {
      return absl::DataLossError(absl::StrCat("model ", id, " belongs to another config"));
    }
    pm.model = std::move(stored.model);
    pm.spend = stored.spend;
    pool.models.push_back(std::move(pm));
  }
  return pool;
}

absl::Status SavePool(const ModelPool& pool, const std::string& dir, const std::string& hash,
                      const std::string& run_dir, StageRecord& record) {
  RETURN_IF_ERROR(EnsureDir(dir));
  std::string masks = "model_id,mask_seed,train_seed,mask\n";
  std::string privacy = "model_id,noise_multiplier,epsilon,delta\n";
  for (int i = 0; i < pool.size(); ++i) {
    const PoolModel& pm = pool.models[static_cast<size_t>(i)];
    absl::StrAppend(&masks, i, ",", pm.mask_seed, ",", pm.train_seed, ",", pm.mask.ToString(),
                    "\n");
    StoredModel stored{pm.model, pm.train_seed, pm.spend, hash};
    const std::string path = (fs::path(dir) / ModelFile(i)).string();
    RETURN_IF_ERROR(SaveModel(stored, path));
    ASSIGN_OR_RETURN(record.artifacts[fs::relative(path, run_dir).string()], FileSha256(path));
    if (pm.spend.has_value() && pool.dp.has_value()) {
      absl::StrAppend(&privacy, i, ",", FormatDouble(pool.dp->noise_multiplier), ",",
                      FormatDouble(pm.spend->epsilon), ",", FormatDouble(pm.spend->delta), "\n");
    }
  }
  std::vector<std::pair<std::string, std::string>> files = {{"masks.csv", masks}};
  if (pool.dp.has_value()) files.emplace_back("privacy.csv", privacy);
  for (const auto& [name, text] : files) {
    const std::string path = (fs::path(dir) / name).string();
    RETURN_IF_ERROR(WriteText(path, text));
    ASSIGN_OR_RETURN(record.artifacts[fs::relative(path, run_dir).string()], FileSha256(path));
  }
  return absl::OkStatus();
}

absl::Status SaveAliraShadows(const AliraShadows& shadows, const std::string& dir,
                              const std::string& hash, const std::string& run_dir,
                              StageRecord& record) {
  RETURN_IF_ERROR(EnsureDir(dir));
  std::string groups = "pair_id,sample_ids\n";
  for (size_t g = 0; g < shadows.pairs.size(); ++g) {
    const AliraShadowPair& pair = shadows.pairs[g];
    absl::StrAppend(&groups, g, ",", absl::StrJoin(pair.group, " "), "\n");
    for (bool in : {true, false}) {
      const std::string path = (fs::path(dir) / PairFile(static_cast<int>(g), in)).string();
      RETURN_IF_ERROR(SaveModel(StoredModel{in ? pair.in : pair.out, 0, std::nullopt, hash}, path));
      ASSIGN_OR_RETURN(record.artifacts[fs::relative(path, run_dir).string()], FileSha256(path));
    }
  }
  const std::string path = (fs::path(dir) / "groups.csv").string();
  RETURN_IF_ERROR(WriteText(path, groups));
  ASSIGN_OR_RETURN(record.artifacts[fs::relative(path, run_dir).string()], FileSha256(path));
  return absl::OkStatus();
}

absl::StatusOr<AliraShadows> LoadAliraShadows(const std::string& dir, int64_t n,
                                              const std::string& hash) {
  ASSIGN_OR_RETURN(std::string text, ReadText((fs::path(dir) / "groups.csv").string()));
  std::vector<std::string> lines = Lines(text);
  AliraShadows shadows;
  shadows.pair_of_sample.assign(static_cast<size_t>(n), -1);
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f = absl::StrSplit(lines[i], ',');
    if (f.size() != 2) return absl::DataLossError(absl::StrCat("bad shadow group row ", i));
    const int g = static_cast<int>(i - 1);
    AliraShadowPair pair;
    for (absl::string_view token : absl::StrSplit(f[1], ' ', absl::SkipEmpty())) {
      ASSIGN_OR_RETURN(int64_t id, ParseInt(token));
      if (id < 0 || id >= n) return absl::DataLossError("shadow group id out of range");
      pair.group.push_back(id);
      shadows.pair_of_sample[static_cast<size_t>(id)] = g;
    }
    for (bool in : {true, false}) {
      ASSIGN_OR_RETURN(StoredModel stored, LoadModel((fs::path(dir) / PairFile(g, in)).string()));
      if (stored.config_hash != hash) {
        return absl::DataLossError("A-LiRA shadow belongs to another config");
      }
      (in ? pair.in : pair.out) = std::move(stored.model);
    }
    shadows.pairs.push_back(std::move(pair));
  }
  return shadows;
}

std::string SweepBase(const SweepPoint& point) {
  return absl::StrCat("after-", UnlearnMethodName(point.method), "-",
                      DirectionName(point.direction), "-k", FormatDouble(point.k));
}

std::vector<SweepPoint> SweepPoints(const ExperimentConfig& config) {
  std::vector<SweepPoint> points;
  for (UnlearnMethod method : config.unlearn.methods) {
    for (Direction direction : config.audit.directions) {
      for (double k : config.audit.k_sweep) points.push_back({method, direction, k});
    }
  }
  return points;
}

SweepPoint PrimaryPoint(const ExperimentConfig& config) {
  return {config.unlearn.methods.front(), config.audit.direction, config.audit.k};
}

std::string ReportProvenance(const ExperimentConfig& config, const SweepPoint& point) {
  return absl::StrCat("pool:m=", config.pool.m, config.model.dp.has_value() ? ";dp" : ";nondp",
                      ";attack=", AttackKindName(config.attack.attack.kind),
                      ";unlearn=", UnlearnMethodName(point.method), ";k=", FormatDouble(point.k),
                      ";direction=", DirectionName(point.direction));
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig config, PipelineOptions options, std::string run_dir,
                   std::string hash)
    : config_(std::move(config)),
      options_(std::move(options)),
      run_dir_(std::move(run_dir)),
      hash_(std::move(hash)) {}

absl::StatusOr<Pipeline> Pipeline::Open(const ExperimentConfig& config,
                                        const PipelineOptions& options) {
  if (options.workers < 1) return absl::InvalidArgumentError("workers must be >= 1");
  ExperimentConfig effective = config;
  if (options.out_dir.has_value()) effective.output_dir = *options.out_dir;
  Pipeline pipeline(effective, options, effective.output_dir, ConfigHash(effective));
  RETURN_IF_ERROR(EnsureDir(pipeline.run_dir_));

  const std::string manifest_path = pipeline.PathOf("manifest.json");
  absl::StatusOr<RunManifest> existing = ReadManifest(manifest_path);
  if (existing.ok() && !options.overwrite) {
    if (existing->config_hash != pipeline.hash_) {
      return PipelineError(absl::StrCat(
          "output directory ", pipeline.run_dir_, " holds results for config ",
          existing->config_hash, ", not ", pipeline.hash_, "; pass --overwrite to replace them"));
    }
    pipeline.manifest_ = *std::move(existing);
  } else if (!existing.ok() && !absl::IsNotFound(existing.status()) && !options.overwrite) {
    return existing.status();
  }
  pipeline.manifest_.config_hash = pipeline.hash_;
  RETURN_IF_ERROR(WriteManifest(pipeline.manifest_, manifest_path));
  RETURN_IF_ERROR(WriteText(pipeline.PathOf(pipeline.ArtifactName("config", ".json")),
                            ConfigToJson(effective).dump(2) + "\n"));
  return pipeline;
}

std::string Pipeline::ArtifactName(absl::string_view base, absl::string_view extension) const {
  return absl::StrCat(base, "-", hash_.substr(0, kShortHash), extension);
}

std::string Pipeline::PathOf(absl::string_view relative) const {
  return (fs::path(run_dir_) / std::string(relative)).string();
}

void Pipeline::Log(absl::string_view line) const {
  if (options_.log) options_.log(line);
}

absl::Status Pipeline::Run(Stage stage) {
  for (Stage before : TransitivePrerequisites(stage)) {
    if (!manifest_.StageValid(std::string(StageName(before)), run_dir_)) {
      return PipelineError(absl::StrCat("stage ", StageName(stage), " requires completed stage ",
                                        StageName(before)));
    }
  }
  return RunStage(stage);
}

absl::Status Pipeline::RunAll() {
  for (Stage stage : AllStages()) RETURN_IF_ERROR(RunStage(stage));
  return absl::OkStatus();
}

absl::Status Pipeline::RunStage(Stage stage) {
  const std::string name(StageName(stage));
  if (manifest_.StageValid(name, run_dir_)) {
    Log(absl::StrCat(name, ": complete, skipped"));
    return absl::OkStatus();
  }
  // Drop this stage and everything that consumed its outputs before running.
  for (Stage other : AllStages()) {
    if (other == stage || TransitivePrerequisites(other).contains(stage)) {
      manifest_.stages.erase(std::string(StageName(other)));
    }
  }
  RETURN_IF_ERROR(WriteManifest(manifest_, PathOf("manifest.json")));

  Log(absl::StrCat(name, ": running"));
  const auto start = std::chrono::steady_clock::now();
  StageRecord record;
  RETURN_IF_ERROR(Execute(stage, record));
  record.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest_.stages[name] = record;
  RETURN_IF_ERROR(WriteManifest(manifest_, PathOf("manifest.json")));
  executed_.push_back(stage);
  Log(absl::StrCat(name, ": done in ", FormatDouble(record.wall_clock_seconds), " s"));
  return absl::OkStatus();
}

absl::Status Pipeline::Execute(Stage stage, StageRecord& record) {
  switch (stage) {
    case Stage::kGenData:
      return GenData(record);
    case Stage::kTrainPool:
      return TrainPool(record);
    case Stage::kAttackBench:
      return AttackBench(record);
    case Stage::kRisk:
      return Risk(record);
    case Stage::kUnlearn:
      return Unlearn(record);
    case Stage::kAudit:
      return Audit(record);
  }
  return absl::InternalError("unknown stage");
}

absl::Status Pipeline::GenData(StageRecord& record) {
  const DatasetSection& d = config_.dataset;
  Dataset dataset;
  if (d.source == "synthetic") {
    ASSIGN_OR_RETURN(dataset, GenerateSynthetic(d.n_samples, d.num_classes, d.feature_dim,
                                                d.cluster_spread, d.seed));
  } else {
    ASSIGN_OR_RETURN(dataset, LoadDelimited(d.path, d.num_classes));
    if (dataset.feature_dim != d.feature_dim) {
      return absl::InvalidArgumentError(absl::StrCat("config dataset.feature_dim is ",
                                                     d.feature_dim, " but ", d.path, " has ",
                                                     dataset.feature_dim, " features"));
    }
    dataset.grid = d.grid;
    RETURN_IF_ERROR(ValidateDataset(dataset));
  }
  const std::string name = ArtifactName("dataset", ".csv");
  RETURN_IF_ERROR(WriteDelimited(dataset, PathOf(name)));
  ASSIGN_OR_RETURN(record.artifacts[name], FileSha256(PathOf(name)));
  return absl::OkStatus();
}

absl::Status Pipeline::TrainPool(StageRecord& record) {
  ASSIGN_OR_RETURN(Dataset dataset,
                   LoadDatasetArtifact(config_, PathOf(ArtifactName("dataset", ".csv"))));
  ASSIGN_OR_RETURN(std::optional<DpConfig> dp, ResolveDp(config_, dataset.size() / 2));
  ASSIGN_OR_RETURN(ModelPool pool,
                   TrainModelPool(dataset, config_.pool.m, config_.Arch(), config_.model.train, dp,
                                  config_.pool.base_seed, options_.workers));
  return SavePool(pool, PathOf(ArtifactName("pool", "")), hash_, run_dir_, record);
}

absl::Status Pipeline::AttackBench(StageRecord& record) {
  ASSIGN_OR_RETURN(Dataset dataset,
                   LoadDatasetArtifact(config_, PathOf(ArtifactName("dataset", ".csv"))));
  ASSIGN_OR_RETURN(std::optional<DpConfig> dp, ResolveDp(config_, dataset.size() / 2));
  ASSIGN_OR_RETURN(ModelPool pool,
                   LoadPool(config_, dataset, dp, PathOf(ArtifactName("pool", "")), hash_));
  ASSIGN_OR_RETURN(
      std::vector<BenchRow> rows,
      RunAttackBench(dataset, pool, config_.attack.attack, config_.attack.bench, options_.workers));
  std::string text =
      "attack,auc,tpr_at_fpr,tpr_at_fpr_calibrated,wall_clock_seconds,shadow_models,"
      "scored_pairs\n";
  for (const BenchRow& row : rows) {
    absl::StrAppend(&text, AttackKindName(row.kind), ",", FormatDouble(row.auc), ",",
                    FormatDouble(row.tpr_at_fpr), ",",
                    row.tpr_at_fpr_calibrated.has_value() ? FormatDouble(*row.tpr_at_fpr_calibrated)
                                                          : std::string(),
                    ",", FormatDouble(row.wall_clock_seconds), ",", row.shadow_models_trained, ",",
                    row.scored_pairs, "\n");
  }
  const std::string name = ArtifactName("bench", ".csv");
  RETURN_IF_ERROR(WriteText(PathOf(name), text));
  ASSIGN_OR_RETURN(record.artifacts[name], FileSha256(PathOf(name)));
  return absl::OkStatus();
}

absl::Status Pipeline::Risk(StageRecord& record) {
  ASSIGN_OR_RETURN(Dataset dataset,
                   LoadDatasetArtifact(config_, PathOf(ArtifactName("dataset", ".csv"))));
  ASSIGN_OR_RETURN(std::optional<DpConfig> dp, ResolveDp(config_, dataset.size() / 2));
  ASSIGN_OR_RETURN(ModelPool pool,
                   LoadPool(config_, dataset, dp, PathOf(ArtifactName("pool", "")), hash_));
  AttackContext context;
  context.config = config_.attack.attack;
  context.leave_one_out = true;
  std::vector<int64_t> ids(static_cast<size_t>(dataset.size()));
  std::iota(ids.begin(), ids.end(), int64_t{0});
  std::optional<AliraShadows> shadows;
  if (context.config.kind == AttackKind::kAlira) {
    ASSIGN_OR_RETURN(
        shadows,
        TrainAliraShadows(dataset, ids, context.config.shadow_group_size, pool.arch, pool.train, dp,
                          DeriveSeed(context.config.seed, kAliraShadowStream), options_.workers));
    RETURN_IF_ERROR(
        SaveAliraShadows(*shadows, PathOf(ArtifactName("alira", "")), hash_, run_dir_, record));
    context.alira = &*shadows;
  } else {
    context.reference = &pool;
  }
  ASSIGN_OR_RETURN(std::vector<SampleScores> scores,
                   CollectScores(pool, context, dataset, ids, options_.workers));
  const std::string provenance =
      absl::StrCat("original;", AttackKindName(context.config.kind), ";m=", pool.size());
  ASSIGN_OR_RETURN(RiskTable table, RiskTableFromScores(scores, provenance));
  const std::string scores_name = ArtifactName("scores-before", ".csv");
  RETURN_IF_ERROR(WriteScoreTable(scores, PathOf(scores_name)));
  ASSIGN_OR_RETURN(record.artifacts[scores_name], FileSha256(PathOf(scores_name)));
  const std::string table_name = ArtifactName("risk-before", ".csv");
  RETURN_IF_ERROR(WriteRiskTable(table, PathOf(table_name)));
  ASSIGN_OR_RETURN(record.artifacts[table_name], FileSha256(PathOf(table_name)));
  return absl::OkStatus();
}

absl::Status Pipeline::Unlearn(StageRecord& record) {
  ASSIGN_OR_RETURN(Dataset dataset,
                   LoadDatasetArtifact(config_, PathOf(ArtifactName("dataset", ".csv"))));
  ASSIGN_OR_RETURN(std::optional<DpConfig> dp, ResolveDp(config_, dataset.size() / 2));
  ASSIGN_OR_RETURN(ModelPool pool,
                   LoadPool(config_, dataset, dp, PathOf(ArtifactName("pool", "")), hash_));
  ASSIGN_OR_RETURN(RiskTable before, ReadRiskTable(PathOf(ArtifactName("risk-before", ".csv"))));
  AttackContext context;
  context.config = config_.attack.attack;
  context.leave_one_out = true;
  std::optional<AliraShadows> shadows;
  if (context.config.kind == AttackKind::kAlira) {
    ASSIGN_OR_RETURN(shadows,
                     LoadAliraShadows(PathOf(ArtifactName("alira", "")), dataset.size(), hash_));
    context.alira = &*shadows;
  }

  auto add = [&](const std::string& name) -> absl::Status {
    ASSIGN_OR_RETURN(record.artifacts[name], FileSha256(PathOf(name)));
    return absl::OkStatus();
  };
  const SweepPoint primary = PrimaryPoint(config_);
  std::vector<SweepPoint> points = SweepPoints(config_);
  bool primary_in_sweep = false;
  for (const SweepPoint& p : points) primary_in_sweep |= p.Key() == primary.Key();
  if (!primary_in_sweep) points.push_back(primary);

  for (const SweepPoint& point : points) {
    ASSIGN_OR_RETURN(std::vector<int64_t> forget, SelectByRisk(before, point.k, point.direction));
    ASSIGN_OR_RETURN(UnlearnOutcome outcome,
                     ReestimateAfterUnlearn(pool, config_.unlearn.ConfigFor(point.method), forget,
                                            dataset, context, {}, options_.workers));
    Log(absl::StrCat("unlearn: ", SweepBase(point), " modified ", outcome.models_modified,
                     " models"));
    const std::string name = ArtifactName(SweepBase(point), ".csv");
    RETURN_IF_ERROR(WriteRiskTable(outcome.table, PathOf(name)));
    RETURN_IF_ERROR(add(name));
    if (point.Key() != primary.Key()) continue;

    const std::string after = ArtifactName("risk-after", ".csv");
    RETURN_IF_ERROR(WriteRiskTable(outcome.table, PathOf(after)));
    RETURN_IF_ERROR(add(after));
    const std::string forget_name = ArtifactName("forget", ".csv");
    RETURN_IF_ERROR(WriteText(
        PathOf(forget_name),
        absl::StrCat("sample_id\n", absl::StrJoin(forget, "\n"), forget.empty() ? "" : "\n")));
    RETURN_IF_ERROR(add(forget_name));
    RETURN_IF_ERROR(SavePool(
        outcome.unlearned,
        PathOf(absl::StrCat(ArtifactName("unlearned", ""), "/", UnlearnMethodName(point.method))),
        hash_, run_dir_, record));
  }
  return absl::OkStatus();
}

absl::Status Pipeline::Audit(StageRecord& record) {
  ASSIGN_OR_RETURN(RiskTable before, ReadRiskTable(PathOf(ArtifactName("risk-before", ".csv"))));
  auto add = [&](const std::string& name) -> absl::Status {
    ASSIGN_OR_RETURN(record.artifacts[name], FileSha256(PathOf(name)));
    return absl::OkStatus();
  };
  auto report_for = [&](const SweepPoint& point,
                        const RiskTable& after) -> absl::StatusOr<AuditReport> {
    ASSIGN_OR_RETURN(std::vector<int64_t> forget, SelectByRisk(before, point.k, point.direction));
    ASSIGN_OR_RETURN(AuditReport report,
                     BuildReport(before, after, forget, config_.audit.thresholds,
                                 ReportProvenance(config_, point)));
    report.config_hash = hash_;
    return report;
  };

  const SweepPoint primary = PrimaryPoint(config_);
  ASSIGN_OR_RETURN(RiskTable after, ReadRiskTable(PathOf(ArtifactName("risk-after", ".csv"))));
  ASSIGN_OR_RETURN(AuditReport report, report_for(primary, after));
  const std::string report_name = ArtifactName("report", ".json");
  RETURN_IF_ERROR(WriteText(PathOf(report_name), ReportToJson(report).dump(2) + "\n"));
  RETURN_IF_ERROR(add(report_name));
  const std::string verdict_name = ArtifactName("verdicts", ".csv");
  RETURN_IF_ERROR(WriteVerdicts(report.verdicts, PathOf(verdict_name)));
  RETURN_IF_ERROR(add(verdict_name));

  // Failure rate against k, one column per method, for each direction and
  // criterion.
  std::string sweep = "method,direction,k,c1,c1_abs,c2,c2_dp,c2_nondp\n";
  std::map<std::pair<Direction, std::string>, std::map<double, std::vector<std::string>>> plots;
  for (const SweepPoint& point : SweepPoints(config_)) {
    ASSIGN_OR_RETURN(RiskTable table,
                     ReadRiskTable(PathOf(ArtifactName(SweepBase(point), ".csv"))));
    ASSIGN_OR_RETURN(AuditReport r, report_for(point, table));
    const std::string c1 = r.failure_rate_c1.has_value() ? FormatDouble(*r.failure_rate_c1) : "";
    const std::string c1_abs =
        r.failure_rate_c1_abs.has_value() ? FormatDouble(*r.failure_rate_c1_abs) : "";
    absl::StrAppend(&sweep, UnlearnMethodName(point.method), ",", DirectionName(point.direction),
                    ",", FormatDouble(point.k), ",", c1, ",", c1_abs, ",",
                    FormatDouble(r.failure_rate_c2), ",", FormatDouble(r.failure_rate_c2_dp), ",",
                    FormatDouble(r.failure_rate_c2_nondp), "\n");
    plots[{point.direction, "c1"}][point.k].push_back(c1);
    plots[{point.direction, "c2"}][point.k].push_back(FormatDouble(r.failure_rate_c2));
  }
  const std::string sweep_name = ArtifactName("sweep", ".csv");
  RETURN_IF_ERROR(WriteText(PathOf(sweep_name), sweep));
  RETURN_IF_ERROR(add(sweep_name));

  std::vector<std::string> methods;
  for (UnlearnMethod method : config_.unlearn.methods) {
    methods.emplace_back(UnlearnMethodName(method));
  }
  for (const auto& [key, rows] : plots) {
    std::string text = absl::StrCat("k,", absl::StrJoin(methods, ","), "\n");
    for (const auto& [k, values] : rows) {
      absl::StrAppend(&text, FormatDouble(k), ",", absl::StrJoin(values, ","), "\n");
    }
    const std::string name =
        ArtifactName(absl::StrCat("plot-", key.second, "-", DirectionName(key.first)), ".csv");
    RETURN_IF_ERROR(WriteText(PathOf(name), text));
    RETURN_IF_ERROR(add(name));
  }
  return absl::OkStatus();
}

}  // namespace unlearn_audit
