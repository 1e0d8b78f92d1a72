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

#include "unlearn_audit/config.h"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "unlearn_audit/status_macros.h"

namespace unlearn_audit {
namespace {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were consumed,
// so anything left over can be rejected as unknown.
class Section {
 public:
  Section(const json& object, std::string where) : object_(object), where_(std::move(where)) {}

  absl::Status CheckObject() const {
    if (!object_.is_object()) return Error("", "must be an object");
    return absl::OkStatus();
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return object_.contains(key) && !object_.at(key).is_null();
  }

  const json& Raw(const std::string& key) const { return object_.at(key); }
  std::string Where(const std::string& key) const { return absl::StrCat(where_, ".", key); }

  absl::Status Get(const std::string& key, double& out) {
    if (!Has(key)) return absl::OkStatus();
    const json& v = object_.at(key);
    if (!v.is_number()) return Error(key, "must be a number");
    out = v.get<double>();
    if (!std::isfinite(out)) return Error(key, "must be finite");
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, int64_t& out) {
    if (!Has(key)) return absl::OkStatus();
    const json& v = object_.at(key);
    if (!v.is_number_integer()) return Error(key, "must be an integer");
    out = v.get<int64_t>();
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, int& out) {
    int64_t wide = out;
    RETURN_IF_ERROR(Get(key, wide));
    if (wide < INT32_MIN || wide > INT32_MAX) return Error(key, "is out of range");
    out = static_cast<int>(wide);
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, uint64_t& out) {
    if (!Has(key)) return absl::OkStatus();
    const json& v = object_.at(key);
    if (!v.is_number_unsigned()) return Error(key, "must be a non-negative integer");
    out = v.get<uint64_t>();
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, bool& out) {
    if (!Has(key)) return absl::OkStatus();
    const json& v = object_.at(key);
    if (!v.is_boolean()) return Error(key, "must be a boolean");
    out = v.get<bool>();
    return absl::OkStatus();
  }

  absl::Status Get(const std::string& key, std::string& out) {
    if (!Has(key)) return absl::OkStatus();
    const json& v = object_.at(key);
    if (!v.is_string()) return Error(key, "must be a string");
    out = v.get<std::string>();
    return absl::OkStatus();
  }

  absl::Status Finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.contains(key)) return Error(key, "is not a recognized key");
    }
    return absl::OkStatus();
  }

  absl::Status Error(const std::string& key, const std::string& what) const {
    return absl::InvalidArgumentError(
        absl::StrCat("config ", key.empty() ? where_ : Where(key), " ", what));
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

absl::Status Require(bool ok, const std::string& message) {
  if (ok) return absl::OkStatus();
  return absl::InvalidArgumentError(absl::StrCat("config ", message));
}

absl::Status ParseDataset(Section& s, DatasetSection& d) {
  RETURN_IF_ERROR(s.CheckObject());
  RETURN_IF_ERROR(s.Get("source", d.source));
  RETURN_IF_ERROR(s.Get("n_samples", d.n_samples));
  RETURN_IF_ERROR(s.Get("num_classes", d.num_classes));
  RETURN_IF_ERROR(s.Get("feature_dim", d.feature_dim));
  RETURN_IF_ERROR(s.Get("cluster_spread", d.cluster_spread));
  RETURN_IF_ERROR(s.Get("seed", d.seed));
  RETURN_IF_ERROR(s.Get("path", d.path));
  if (s.Has("grid")) {
    Section g(s.Raw("grid"), s.Where("grid"));
    RETURN_IF_ERROR(g.CheckObject());
    GridLayout layout;
    RETURN_IF_ERROR(g.Get("height", layout.height));
    RETURN_IF_ERROR(g.Get("width", layout.width));
    RETURN_IF_ERROR(g.Finish());
    RETURN_IF_ERROR(
        Require(layout.height > 0 && layout.width > 0, "dataset.grid sides must be positive"));
    d.grid = layout;
  }
  RETURN_IF_ERROR(s.Finish());
  RETURN_IF_ERROR(Require(d.source == "synthetic" || d.source == "delimited",
                          "dataset.source must be \"synthetic\" or \"delimited\""));
  RETURN_IF_ERROR(Require(d.num_classes >= 2, "dataset.num_classes must be >= 2"));
  if (d.source == "synthetic") {
    RETURN_IF_ERROR(Require(d.n_samples >= 4, "dataset.n_samples must be >= 4"));
    RETURN_IF_ERROR(Require(d.feature_dim > 0, "dataset.feature_dim must be positive"));
    RETURN_IF_ERROR(Require(d.cluster_spread > 0, "dataset.cluster_spread must be positive"));
    RETURN_IF_ERROR(Require(d.path.empty(), "dataset.path is only used by delimited data"));
  } else {
    RETURN_IF_ERROR(Require(!d.path.empty(), "dataset.path is required for delimited data"));
  }
  if (d.grid.has_value() && d.source == "synthetic") {
    RETURN_IF_ERROR(Require(d.grid->height * d.grid->width == d.feature_dim,
                            "dataset.grid area must equal feature_dim"));
  }
  return absl::OkStatus();
}

absl::Status ParseTrain(Section& s, TrainConfig& t) {
  RETURN_IF_ERROR(s.CheckObject());
  RETURN_IF_ERROR(s.Get("learning_rate", t.learning_rate));
  RETURN_IF_ERROR(s.Get("epochs", t.epochs));
  RETURN_IF_ERROR(s.Get("batch_size", t.batch_size));
  RETURN_IF_ERROR(s.Get("weight_decay", t.weight_decay));
  RETURN_IF_ERROR(s.Finish());
  RETURN_IF_ERROR(Require(t.learning_rate > 0, "model.train.learning_rate must be positive"));
  RETURN_IF_ERROR(Require(t.epochs >= 1, "model.train.epochs must be >= 1"));
  RETURN_IF_ERROR(Require(t.batch_size >= 1, "model.train.batch_size must be >= 1"));
  return Require(t.weight_decay >= 0, "model.train.weight_decay must be >= 0");
}

absl::Status ParseDp(Section& s, DpSection& dp) {
  RETURN_IF_ERROR(s.CheckObject());
  RETURN_IF_ERROR(s.Get("clip_norm", dp.clip_norm));
  RETURN_IF_ERROR(s.Get("delta", dp.delta));
  double value = 0.0;
  if (s.Has("noise_multiplier")) {
    RETURN_IF_ERROR(s.Get("noise_multiplier", value));
    dp.noise_multiplier = value;
  }
  if (s.Has("target_epsilon")) {
    RETURN_IF_ERROR(s.Get("target_epsilon", value));
    dp.target_epsilon = value;
  }
  RETURN_IF_ERROR(s.Finish());
  RETURN_IF_ERROR(Require(dp.clip_norm > 0, "model.dp.clip_norm must be positive"));
  RETURN_IF_ERROR(Require(dp.delta > 0 && dp.delta < 1, "model.dp.delta must be in (0, 1)"));
  RETURN_IF_ERROR(Require(dp.noise_multiplier.has_value() != dp.target_epsilon.has_value(),
                          "model.dp needs exactly one of noise_multiplier and target_epsilon"));
  if (dp.noise_multiplier.has_value()) {
    RETURN_IF_ERROR(
        Require(*dp.noise_multiplier > 0, "model.dp.noise_multiplier must be positive"));
  } else {
    RETURN_IF_ERROR(Require(*dp.target_epsilon > 0, "model.dp.target_epsilon must be positive"));
  }
  return absl::OkStatus();
}

absl::Status ParseModel(Section& s, ModelSection& m) {
  RETURN_IF_ERROR(s.CheckObject());
  if (s.Has("hidden")) {
    const json& hidden = s.Raw("hidden");
    if (!hidden.is_array()) return s.Error("hidden", "must be an array of widths");
    m.hidden.clear();
    for (const json& width : hidden) {
      if (!width.is_number_integer() || width.get<int64_t>() <= 0 ||
          width.get<int64_t>() > 1 << 20) {
        return s.Error("hidden", "entries must be positive integers");
      }
      m.hidden.push_back(width.get<int>());
    }
  }
  if (s.Has("train")) {
    Section t(s.Raw("train"), s.Where("train"));
    RETURN_IF_ERROR(ParseTrain(t, m.train));
  }
  if (s.Has("dp")) {
    Section dp(s.Raw("dp"), s.Where("dp"));
    DpSection section;
    RETURN_IF_ERROR(ParseDp(dp, section));
    m.dp = section;
  }
  return s.Finish();
}

absl::Status ParseScheme(Section& s, AugmentationScheme& scheme) {
  RETURN_IF_ERROR(s.CheckObject());
  std::string kind = "jitter";
  RETURN_IF_ERROR(s.Get("kind", kind));
  if (kind == "jitter") {
    JitterAugmentation jitter;
    RETURN_IF_ERROR(s.Get("eta", jitter.eta));
    scheme = jitter;
  } else if (kind == "grid") {
    GridAugmentation grid;
    RETURN_IF_ERROR(s.Get("allow_flip", grid.allow_flip));
    RETURN_IF_ERROR(s.Get("max_shift", grid.max_shift));
    scheme = grid;
  } else {
    return s.Error("kind", "must be \"jitter\" or \"grid\"");
  }
  return s.Finish();
}

absl::Status ParseBench(Section& s, BenchConfig& b) {
  RETURN_IF_ERROR(s.CheckObject());
  RETURN_IF_ERROR(s.Get("num_samples", b.num_samples));
  RETURN_IF_ERROR(s.Get("online_shadows", b.online_shadows));
  RETURN_IF_ERROR(s.Get("offline_shadows", b.offline_shadows));
  RETURN_IF_ERROR(s.Get("calibration_models", b.calibration_models));
  RETURN_IF_ERROR(s.Get("fpr", b.fpr));
  RETURN_IF_ERROR(s.Get("seed", b.seed));
  RETURN_IF_ERROR(s.Finish());
  RETURN_IF_ERROR(Require(b.num_samples >= 0, "attack.bench.num_samples must be >= 0"));
  for (int count : {b.online_shadows, b.offline_shadows}) {
    RETURN_IF_ERROR(
        Require(count >= 4 && count % 2 == 0, "attack.bench shadow counts must be even and >= 4"));
  }
  RETURN_IF_ERROR(Require(
      b.calibration_models == 0 || (b.calibration_models >= 4 && b.calibration_models % 2 == 0),
      "attack.bench.calibration_models must be 0 or even and >= 4"));
  return Require(b.fpr > 0 && b.fpr <= 1, "attack.bench.fpr must be in (0, 1]");
}

absl::Status ParseAttack(Section& s, AttackSection& a) {
  RETURN_IF_ERROR(s.CheckObject());
  std::string kind(AttackKindName(a.attack.kind));
  RETURN_IF_ERROR(s.Get("kind", kind));
  absl::StatusOr<AttackKind> parsed = ParseAttackKind(kind);
  if (!parsed.ok()) return s.Error("kind", "must be alira, online or offline");
  a.attack.kind = *parsed;
  RETURN_IF_ERROR(s.Get("n_aug", a.attack.n_aug));
  if (s.Has("scheme")) {
    Section scheme(s.Raw("scheme"), s.Where("scheme"));
    RETURN_IF_ERROR(ParseScheme(scheme, a.attack.scheme));
  }
  RETURN_IF_ERROR(s.Get("seed", a.attack.seed));
  RETURN_IF_ERROR(s.Get("shadow_group_size", a.attack.shadow_group_size));
  if (s.Has("bench")) {
    Section bench(s.Raw("bench"), s.Where("bench"));
    RETURN_IF_ERROR(ParseBench(bench, a.bench));
  }
  RETURN_IF_ERROR(s.Finish());
  RETURN_IF_ERROR(Require(a.attack.n_aug >= 1, "attack.n_aug must be >= 1"));
  return Require(a.attack.shadow_group_size >= 1, "attack.shadow_group_size must be >= 1");
}

absl::Status ParseMethodParams(Section& s, UnlearnConfig& u) {
  RETURN_IF_ERROR(s.CheckObject());
  RETURN_IF_ERROR(s.Get("steps", u.steps));
  RETURN_IF_ERROR(s.Get("learning_rate", u.learning_rate));
  RETURN_IF_ERROR(s.Get("batch_size", u.batch_size));
  RETURN_IF_ERROR(s.Get("alpha", u.alpha));
  RETURN_IF_ERROR(s.Get("beta", u.beta));
  RETURN_IF_ERROR(s.Get("gamma", u.gamma));
  RETURN_IF_ERROR(s.Get("repair", u.repair));
  RETURN_IF_ERROR(s.Finish());
  absl::Status valid = ValidateUnlearnConfig(u);
  if (!valid.ok()) return Require(false, absl::StrCat(s.Where(""), " ", valid.message()));
  return absl::OkStatus();
}

absl::Status ParseUnlearn(Section& s, UnlearnSection& u) {
  RETURN_IF_ERROR(s.CheckObject());
  if (s.Has("methods")) {
    const json& methods = s.Raw("methods");
    if (!methods.is_array() || methods.empty()) {
      return s.Error("methods", "must be a non-empty array");
    }
    u.methods.clear();
    for (const json& name : methods) {
      if (!name.is_string()) return s.Error("methods", "entries must be strings");
      absl::StatusOr<UnlearnMethod> method = ParseUnlearnMethod(name.get<std::string>());
      if (!method.ok()) {
        return s.Error("methods", absl::StrCat("has unknown method ", name.dump()));
      }
      for (UnlearnMethod seen : u.methods) {
        if (seen == *method) return s.Error("methods", "lists a method twice");
      }
      u.methods.push_back(*method);
    }
  }
  u.params.clear();
  for (UnlearnMethod method : u.methods) {
    UnlearnConfig config;
    config.method = method;
    u.params[method] = config;
  }
  if (s.Has("params")) {
    const json& params = s.Raw("params");
    if (!params.is_object()) return s.Error("params", "must be an object");
    for (const auto& [name, value] : params.items()) {
      absl::StatusOr<UnlearnMethod> method = ParseUnlearnMethod(name);
      if (!method.ok() || !u.params.contains(*method)) {
        return s.Error("params", absl::StrCat("has key ", name, " that is not a listed method"));
      }
      Section p(value, absl::StrCat(s.Where("params"), ".", name));
      RETURN_IF_ERROR(ParseMethodParams(p, u.params[*method]));
    }
  }
  RETURN_IF_ERROR(s.Get("seed", u.seed));
  return s.Finish();
}

absl::Status ParseAudit(Section& s, AuditSection& a) {
  RETURN_IF_ERROR(s.CheckObject());
  Thresholds& t = a.thresholds;
  RETURN_IF_ERROR(s.Get("t1", t.t1));
  RETURN_IF_ERROR(s.Get("t_abs", t.t_abs));
  RETURN_IF_ERROR(s.Get("epsilon", t.epsilon));
  RETURN_IF_ERROR(s.Get("t2", t.t2));
  RETURN_IF_ERROR(s.Get("dp_mode", t.dp_mode));
  RETURN_IF_ERROR(s.Get("k", a.k));
  std::string direction(DirectionName(a.direction));
  RETURN_IF_ERROR(s.Get("direction", direction));
  absl::StatusOr<Direction> parsed = ParseDirection(direction);
  if (!parsed.ok()) return s.Error("direction", "must be top or bottom");
  a.direction = *parsed;
  if (s.Has("k_sweep")) {
    const json& sweep = s.Raw("k_sweep");
    if (!sweep.is_array()) return s.Error("k_sweep", "must be an array");
    a.k_sweep.clear();
    for (const json& k : sweep) {
      if (!k.is_number()) return s.Error("k_sweep", "entries must be numbers");
      a.k_sweep.push_back(k.get<double>());
    }
  }
  if (s.Has("directions")) {
    const json& dirs = s.Raw("directions");
    if (!dirs.is_array() || dirs.empty()) return s.Error("directions", "must be a non-empty array");
    a.directions.clear();
    for (const json& d : dirs) {
      absl::StatusOr<Direction> dir =
          d.is_string() ? ParseDirection(d.get<std::string>())
                        : absl::StatusOr<Direction>(absl::InvalidArgumentError(""));
      if (!dir.ok()) return s.Error("directions", "entries must be top or bottom");
      for (Direction seen : a.directions) {
        if (seen == *dir) return s.Error("directions", "lists a direction twice");
      }
      a.directions.push_back(*dir);
    }
  }
  RETURN_IF_ERROR(s.Finish());
  absl::Status valid = ValidateThresholds(t);
  if (!valid.ok()) return Require(false, absl::StrCat("audit: ", valid.message()));
  RETURN_IF_ERROR(Require(a.k > 0 && a.k <= 0.5, "audit.k must be in (0, 0.5]"));
  for (double k : a.k_sweep) {
    RETURN_IF_ERROR(Require(k > 0 && k <= 0.5, "audit.k_sweep entries must be in (0, 0.5]"));
  }
  return absl::OkStatus();
}

json SchemeToJson(const AugmentationScheme& scheme) {
  if (const auto* jitter = std::get_if<JitterAugmentation>(&scheme)) {
    return json{{"kind", "jitter"}, {"eta", jitter->eta}};
  }
  const auto& grid = std::get<GridAugmentation>(scheme);
  return json{{"kind", "grid"}, {"allow_flip", grid.allow_flip}, {"max_shift", grid.max_shift}};
}

json OptionalNumber(const std::optional<double>& value) {
  return value.has_value() ? json(*value) : json(nullptr);
}

}  // namespace

UnlearnConfig UnlearnSection::ConfigFor(UnlearnMethod method) const {
  UnlearnConfig config;
  if (auto it = params.find(method); it != params.end()) config = it->second;
  config.method = method;
  config.seed = seed;
  return config;
}

std::vector<int> ExperimentConfig::Arch() const {
  std::vector<int> arch;
  arch.push_back(dataset.feature_dim);
  arch.insert(arch.end(), model.hidden.begin(), model.hidden.end());
  arch.push_back(dataset.num_classes);
  return arch;
}

absl::StatusOr<ExperimentConfig> ConfigFromJson(const json& root) {
  ExperimentConfig config;
  for (UnlearnMethod method : config.unlearn.methods) {
    config.unlearn.params[method].method = method;
  }
  Section s(root, "root");
  if (!root.is_object()) return absl::InvalidArgumentError("config must be a JSON object");
  if (s.Has("dataset")) {
    Section d(root.at("dataset"), "dataset");
    RETURN_IF_ERROR(ParseDataset(d, config.dataset));
  }
  if (s.Has("model")) {
    Section m(root.at("model"), "model");
    RETURN_IF_ERROR(ParseModel(m, config.model));
  }
  if (s.Has("pool")) {
    Section p(root.at("pool"), "pool");
    RETURN_IF_ERROR(p.CheckObject());
    RETURN_IF_ERROR(p.Get("m", config.pool.m));
    RETURN_IF_ERROR(p.Get("base_seed", config.pool.base_seed));
    RETURN_IF_ERROR(p.Finish());
  }
  if (s.Has("attack")) {
    Section a(root.at("attack"), "attack");
    RETURN_IF_ERROR(ParseAttack(a, config.attack));
  }
  if (s.Has("unlearn")) {
    Section u(root.at("unlearn"), "unlearn");
    RETURN_IF_ERROR(ParseUnlearn(u, config.unlearn));
  }
  if (s.Has("audit")) {
    Section a(root.at("audit"), "audit");
    RETURN_IF_ERROR(ParseAudit(a, config.audit));
  }
  RETURN_IF_ERROR(s.Get("output_dir", config.output_dir));
  RETURN_IF_ERROR(s.Finish());

  RETURN_IF_ERROR(
      Require(config.pool.m >= 4 && config.pool.m % 2 == 0, "pool.m must be even and >= 4"));
  if (config.dataset.source == "synthetic") {
    RETURN_IF_ERROR(Require(config.model.train.batch_size <= config.dataset.n_samples / 2,
                            "model.train.batch_size exceeds the pool models' training sets"));
  }
  std::optional<GridLayout> grid = config.dataset.grid;
  absl::Status scheme = ValidateScheme(config.attack.attack.scheme, grid);
  if (!scheme.ok()) return Require(false, absl::StrCat("attack.scheme: ", scheme.message()));
  RETURN_IF_ERROR(Require(!config.output_dir.empty(), "output_dir must not be empty"));
  return config;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::InvalidArgumentError(absl::StrCat("cannot open config ", path));
  json root = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat("config ", path, " is not valid JSON"));
  }
  return ConfigFromJson(root);
}

json ConfigToJson(const ExperimentConfig& config) {
  const DatasetSection& d = config.dataset;
  json dataset = {{"source", d.source},
                  {"n_samples", d.n_samples},
                  {"num_classes", d.num_classes},
                  {"feature_dim", d.feature_dim},
                  {"cluster_spread", d.cluster_spread},
                  {"seed", d.seed},
                  {"path", d.path}};
  dataset["grid"] = d.grid.has_value() ? json{{"height", d.grid->height}, {"width", d.grid->width}}
                                       : json(nullptr);

  const TrainConfig& t = config.model.train;
  json model = {{"hidden", config.model.hidden},
                {"train",
                 {{"learning_rate", t.learning_rate},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"weight_decay", t.weight_decay}}}};
  if (config.model.dp.has_value()) {
    const DpSection& dp = *config.model.dp;
    model["dp"] = {{"clip_norm", dp.clip_norm},
                   {"delta", dp.delta},
                   {"noise_multiplier", OptionalNumber(dp.noise_multiplier)},
                   {"target_epsilon", OptionalNumber(dp.target_epsilon)}};
  } else {
    model["dp"] = nullptr;
  }

  const AttackConfig& a = config.attack.attack;
  const BenchConfig& b = config.attack.bench;
  json attack = {{"kind", AttackKindName(a.kind)},
                 {"n_aug", a.n_aug},
                 {"scheme", SchemeToJson(a.scheme)},
                 {"seed", a.seed},
                 {"shadow_group_size", a.shadow_group_size},
                 {"bench",
                  {{"num_samples", b.num_samples},
                   {"online_shadows", b.online_shadows},
                   {"offline_shadows", b.offline_shadows},
                   {"calibration_models", b.calibration_models},
                   {"fpr", b.fpr},
                   {"seed", b.seed}}}};

  json methods = json::array();
  json params = json::object();
  for (UnlearnMethod method : config.unlearn.methods) {
    methods.push_back(UnlearnMethodName(method));
    const UnlearnConfig u = config.unlearn.ConfigFor(method);
    params[std::string(UnlearnMethodName(method))] = {{"steps", u.steps},
                                                      {"learning_rate", u.learning_rate},
                                                      {"batch_size", u.batch_size},
                                                      {"alpha", u.alpha},
                                                      {"beta", u.beta},
                                                      {"gamma", u.gamma},
                                                      {"repair", u.repair}};
  }
  json unlearn = {{"methods", methods}, {"params", params}, {"seed", config.unlearn.seed}};

  const AuditSection& au = config.audit;
  json directions = json::array();
  for (Direction dir : au.directions) directions.push_back(DirectionName(dir));
  json audit = {{"t1", au.thresholds.t1},
                {"t_abs", au.thresholds.t_abs},
                {"epsilon", au.thresholds.epsilon},
                {"t2", au.thresholds.t2},
                {"dp_mode", au.thresholds.dp_mode},
                {"k", au.k},
                {"direction", DirectionName(au.direction)},
                {"k_sweep", au.k_sweep},
                {"directions", directions}};

  return json{{"dataset", dataset},
              {"model", model},
              {"pool", {{"m", config.pool.m}, {"base_seed", config.pool.base_seed}}},
              {"attack", attack},
              {"unlearn", unlearn},
              {"audit", audit},
              {"output_dir", config.output_dir}};
}

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string ConfigHash(const ExperimentConfig& config) {
  json canonical = ConfigToJson(config);
  canonical.erase("output_dir");
  return Sha256Hex(canonical.dump());
}

absl::StatusOr<std::optional<DpConfig>> ResolveDp(const ExperimentConfig& config, int64_t members) {
  if (!config.model.dp.has_value()) return std::optional<DpConfig>();
  const DpSection& section = *config.model.dp;
  DpConfig dp;
  dp.clip_norm = section.clip_norm;
  dp.delta = section.delta;
  if (section.noise_multiplier.has_value()) {
    dp.noise_multiplier = *section.noise_multiplier;
  } else {
    const int64_t steps = StepsFor(config.model.train, members);
    ASSIGN_OR_RETURN(dp.noise_multiplier,
                     NoiseMultiplierForEpsilon(*section.target_epsilon, steps, dp.delta));
  }
  return std::optional<DpConfig>(dp);
}

}  // namespace unlearn_audit
