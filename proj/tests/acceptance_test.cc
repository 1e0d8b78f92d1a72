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

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.
//
//   acceptance_test                 runs every criterion
//   acceptance_test --criterion 4   runs one

#include <sys/resource.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "oracles.h"
#include "unlearn_audit/attack.h"
#include "unlearn_audit/audit.h"
#include "unlearn_audit/bench.h"
#include "unlearn_audit/model.h"
#include "unlearn_audit/random.h"
#include "unlearn_audit/risk.h"
#include "unlearn_audit/unlearn.h"

namespace unlearn_audit {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome Fail(std::string detail) { return {false, std::move(detail)}; }

template <typename T>
T OrDie(absl::StatusOr<T> v) {
  if (!v.ok()) {
    std::cerr << "unexpected error: " << v.status() << "\n";
    std::exit(1);
  }
  return *std::move(v);
}

int Majority(const std::vector<bool>& votes) {
  return static_cast<int>(std::count(votes.begin(), votes.end(), true));
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ModelState LinearLogitModel(double slope, double intercept) {
  return OrDie(ModelState::Create({1, 2}, {slope, 0.0, intercept, 0.0}));
}

// Closed-form oracles.
Outcome Criterion1() {
  const double phi = OrDie(LogitTransform(0.9));
  const double phi_err = std::abs(phi - std::log(9.0));

  // Online: N_in = N(2, 2), N_out = N(2 - 2 sqrt 2, 2), target logit 2.
  const double c = 2.0 - 2.0 * std::numbers::sqrt2;
  const Sample sample{0, {0.0}, 0};
  SplitMask in(1), out(1);
  in.set(0, true);
  const std::vector<ShadowModel> pool = {{LinearLogitModel(0, 1.0), in},
                                         {LinearLogitModel(0, 3.0), in},
                                         {LinearLogitModel(0, c - 1.0), out},
                                         {LinearLogitModel(0, c + 1.0), out}};
  const double online = OrDie(OnlineLiraScore(LinearLogitModel(0, 2.0), pool, sample)).lambda();

  // Augmentation attack: in-model logit equals the augmented feature, the
  // out-model is shifted down by two standard deviations of the draw.
  const Sample point{0, {0.25}, 0};
  const AugmentationScheme scheme = JitterAugmentation{0.5};
  const AliraReference probe = OrDie(
      PrepareAliraReference(LinearLogitModel(1, 0), LinearLogitModel(1, 0), point, 40, scheme, 77));
  std::vector<double> xs;
  for (const Sample& a : probe.augmented) xs.push_back(a.features[0]);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (xs.size() - 1));
  const double alira = OrDie(AliraScore(LinearLogitModel(0, mean), LinearLogitModel(1, 0),
                                        LinearLogitModel(1, -2 * sd), point, 40, scheme, 77))
                           .lambda();

  const double eps = OrDie(AccountEpsilon(1.0, 1, 1e-5));
  const double eps_err = std::abs(eps - testing::NumericEpsilon(1.0, 1, 1e-5));

  const double e2 = std::exp(2.0);
  const bool pass = phi_err <= 1e-12 && std::abs(online - e2) <= 1e-9 &&
                    std::abs(alira - e2) <= 1e-9 && eps_err <= 1e-6;
  return {pass, absl::StrFormat("|phi-ln9|=%.1e |online-e2|=%.1e |alira-e2|=%.1e |eps-num|=%.1e",
                                phi_err, std::abs(online - e2), std::abs(alira - e2), eps_err)};
}

// Brute-force equivalence.
Outcome Criterion2() {
  std::mt19937_64 rng(20240601);
  int auc_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 2 + rng() % 63;
    std::vector<double> scores(n);
    std::vector<uint8_t> member(n);
    for (size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 10) / 3.0;
      member[i] = rng() % 2;
    }
    member[0] = 1;
    member[1] = 0;
    auc_mismatch += OrDie(Auc(scores, member)) != testing::PairwiseAuc(scores, member);
  }
  int risk_mismatch = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const size_t nm = 1 + rng() % 32, nn = 1 + rng() % 32;
    const int levels = 2 + static_cast<int>(rng() % 12);
    std::vector<double> in(nm), out(nn);
    for (double& s : in) s = static_cast<double>(rng() % levels) + 0.5 * (rng() % 2);
    for (double& s : out) s = static_cast<double>(rng() % levels);
    const int64_t den = std::max<int64_t>(static_cast<int64_t>(nn), 2);
    const RiskRecord got = OrDie(PerSampleRisk(in, out, 1.0 / static_cast<double>(den)));
    const RiskRecord want = testing::BruteForceRisk(in, out, den);
    risk_mismatch += !(got.tpr == want.tpr && got.fpr == want.fpr && got.ratio == want.ratio &&
                       got.ln_ratio == want.ln_ratio);
  }
  return {auc_mismatch == 0 && risk_mismatch == 0,
          absl::StrCat("auc mismatches ", auc_mismatch, "/200, risk mismatches ", risk_mismatch,
                       "/500")};
}

// Analytic gradients against central differences.
Outcome Criterion3() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> width(1, 5);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> arch = {width(rng)};
    for (int h = 0; h < trial % 3; ++h) arch.push_back(width(rng) + 1);
    arch.push_back(width(rng) + 1);
    ModelState m = OrDie(InitModel(arch, static_cast<uint64_t>(trial)));
    for (double& p : m.mutable_params()) p = normal(rng);
    std::vector<double> x(static_cast<size_t>(arch.front()));
    for (double& v : x) v = normal(rng);
    const int label = static_cast<int>(rng() % static_cast<uint64_t>(arch.back()));
    std::vector<double> grad(m.params().size());
    SampleLossGradient(m, x, label, absl::MakeSpan(grad));
    const std::vector<double> numeric = testing::FiniteDifferenceGradient(m, x, label);
    for (size_t k = 0; k < grad.size(); ++k) {
      const double scale = std::max({std::abs(numeric[k]), std::abs(grad[k]), 1e-3});
      worst = std::max(worst, std::abs(numeric[k] - grad[k]) / scale);
    }
  }
  return {worst <= 1e-5, absl::StrFormat("worst relative error %.2e over 20 networks", worst)};
}

// Attack bench on the two-class set, one run per seed, shared by 4 and 5.
struct BenchRun {
  double alira_auc, online_auc, offline_auc;
  double alira_seconds, online_seconds;
  int alira_models, online_models;
};

const std::vector<BenchRun>& AttackRuns() {
  static const std::vector<BenchRun>* runs = [] {
    auto* out = new std::vector<BenchRun>;
    const TrainConfig train{.learning_rate = 0.5, .epochs = 200, .batch_size = 16};
    for (uint64_t seed : {1, 2, 3}) {
      const Dataset d = OrDie(GenerateSynthetic(512, 2, 8, 0.1, seed));
      const ModelPool targets =
          OrDie(TrainModelPool(d, 64, {8, 32, 2}, train, std::nullopt, 100 * seed, 4));
      const AttackConfig attack{
          .n_aug = 100, .scheme = JitterAugmentation{0.05}, .seed = seed, .shadow_group_size = 32};
      const BenchConfig bench{.num_samples = 32,
                              .online_shadows = 64,
                              .offline_shadows = 32,
                              .fpr = 0.01,
                              .seed = seed};
      const std::vector<BenchRow> rows = OrDie(RunAttackBench(d, targets, attack, bench, 4));
      out->push_back({rows[0].auc, rows[1].auc, rows[2].auc, rows[0].wall_clock_seconds,
                      rows[1].wall_clock_seconds, rows[0].shadow_models_trained,
                      rows[1].shadow_models_trained});
    }
    return out;
  }();
  return *runs;
}

Outcome Criterion4() {
  std::vector<bool> alira_ok, online_ok, gap_ok, offline_ok;
  std::string detail;
  for (const BenchRun& r : AttackRuns()) {
    alira_ok.push_back(r.alira_auc >= 0.65);
    online_ok.push_back(r.online_auc >= 0.65);
    gap_ok.push_back(std::abs(r.alira_auc - r.online_auc) <= 0.05);
    offline_ok.push_back(r.offline_auc <= r.online_auc + 0.02);
    absl::StrAppendFormat(&detail, "[alira %.3f online %.3f offline %.3f] ", r.alira_auc,
                          r.online_auc, r.offline_auc);
  }
  const bool pass = Majority(alira_ok) >= 2 && Majority(online_ok) >= 2 && Majority(gap_ok) >= 2 &&
                    Majority(offline_ok) >= 2;
  absl::StrAppend(&detail, "majorities alira>=.65 ", Majority(alira_ok), "/3, online>=.65 ",
                  Majority(online_ok), "/3, gap<=.05 ", Majority(gap_ok),
                  "/3, offline<=online+.02 ", Majority(offline_ok), "/3");
  return {pass, detail};
}

Outcome Criterion5() {
  std::vector<bool> ok;
  std::string detail;
  for (const BenchRun& r : AttackRuns()) {
    ok.push_back(r.alira_seconds <= r.online_seconds / 3.0);
    absl::StrAppendFormat(&detail, "[alira %.2fs/%d models, online %.2fs/%d models] ",
                          r.alira_seconds, r.alira_models, r.online_seconds, r.online_models);
  }
  absl::StrAppend(&detail, Majority(ok), "/3 runs within a third");
  return {Majority(ok) >= 2, detail};
}

// The memorizable set shared by 6 and 7.
struct RiskSetup {
  Dataset dataset;
  ModelPool pool;
  AliraShadows shadows;
  AttackContext context;
  RiskTable before;
};

RiskSetup MemorizableRun(uint64_t seed, bool dp) {
  RiskSetup s;
  s.dataset = OrDie(GenerateSynthetic(512, 10, 32, 1.0, seed));
  const TrainConfig train{.learning_rate = 0.1, .epochs = 100, .batch_size = 32};
  std::optional<DpConfig> dp_config;
  if (dp) {
    const int64_t steps = StepsFor(train, s.dataset.size() / 2);
    dp_config = DpConfig{.clip_norm = 1.0,
                         .noise_multiplier = OrDie(NoiseMultiplierForEpsilon(2.0, steps, 1e-5)),
                         .delta = 1e-5};
  }
  s.pool = OrDie(TrainModelPool(s.dataset, 32, {32, 32, 10}, train, dp_config, 1000 * seed, 4));
  std::vector<int64_t> ids(static_cast<size_t>(s.dataset.size()));
  std::iota(ids.begin(), ids.end(), int64_t{0});
  s.shadows = OrDie(
      TrainAliraShadows(s.dataset, ids, 64, s.pool.arch, train, dp_config, DeriveSeed(seed, 1), 4));
  s.context.config = {.kind = AttackKind::kAlira,
                      .n_aug = 100,
                      .scheme = JitterAugmentation{0.5},
                      .seed = seed,
                      .shadow_group_size = 64};
  s.context.alira = &s.shadows;
  s.before = OrDie(EstimateRiskTable(s.dataset, s.pool, s.context, {}, 4));
  return s;
}

Outcome Criterion6() {
  int pass = 0, total = 0;
  std::string detail;
  for (uint64_t seed : {1, 2, 3}) {
    RiskSetup s = MemorizableRun(seed, false);
    s.context.alira = &s.shadows;
    const std::vector<int64_t> forget = OrDie(SelectByRisk(s.before, 0.05, Direction::kTop));
    const UnlearnOutcome after =
        OrDie(ReestimateAfterUnlearn(s.pool, {.method = UnlearnMethod::kRetrain, .seed = seed},
                                     forget, s.dataset, s.context, {}, 4));
    const std::vector<CriterionVerdict> v =
        OrDie(CheckCriterion1(s.before, after.table, forget, 0.0, 0.01));
    int seed_pass = 0;
    for (size_t i = 0; i < forget.size(); ++i) seed_pass += v[i].pass;
    pass += seed_pass;
    total += static_cast<int>(forget.size());
    absl::StrAppend(&detail, "seed ", seed, ": ", seed_pass, "/", forget.size(), "; ");
  }
  const double rate = static_cast<double>(pass) / total;
  absl::StrAppendFormat(&detail, "overall %.3f (need >= 0.9)", rate);
  return {rate >= 0.9, detail};
}

Outcome Criterion7() {
  std::vector<bool> ok;
  std::string detail;
  for (uint64_t seed : {1, 2, 3}) {
    std::vector<double> medians;
    for (bool dp : {false, true}) {
      const RiskSetup s = MemorizableRun(seed, dp);
      std::vector<double> ln;
      for (const RiskRecord& r : s.before.records) ln.push_back(r.ln_ratio);
      medians.push_back(Median(ln));
    }
    ok.push_back(medians[1] < medians[0]);
    absl::StrAppendFormat(&detail, "seed %d: dp %.3f vs non-dp %.3f; ", seed, medians[1],
                          medians[0]);
  }
  absl::StrAppend(&detail, Majority(ok), "/3 seeds ordered");
  return {Majority(ok) >= 2, detail};
}

// Hand-enumerated audit tables.
Outcome Criterion8() {
  const auto table = [](const std::vector<double>& ratios) {
    RiskTable t;
    for (size_t i = 0; i < ratios.size(); ++i) {
      RiskRecord r;
      r.sample_id = static_cast<int64_t>(i);
      r.fpr = r.fpr_floor = 1.0 / 16.0;
      r.ratio = ratios[i];
      r.tpr = std::min(1.0, ratios[i] / 16.0);
      r.ln_ratio = ratios[i] > 0 ? std::log(ratios[i]) : -std::numeric_limits<double>::infinity();
      t.records.push_back(r);
    }
    return t;
  };
  // Forget {0, 1}, retained {2, 3}; before max ratio 6.
  //   c1:       1 < 6 pass,      2.5 < 2 fail
  //   c1_abs:   ln 1 < .01 pass, ln 2.5 fail
  //   c2_dp:    ln 6 <= 2 pass,  ln 8 fail
  //   c2_nondp: 6 <= 6 pass,     8 fail
  const RiskTable before = table({6.0, 2.0, 3.0, 1.0});
  const RiskTable after = table({1.0, 2.5, 6.0, 8.0});
  const AuditReport r = OrDie(
      BuildReport(before, after, {0, 1}, {.t1 = 0, .t_abs = 0.01, .epsilon = 2, .t2 = 0}, "hand"));
  const std::vector<std::pair<Criterion, std::vector<bool>>> expected = {
      {Criterion::kC1, {true, false}},
      {Criterion::kC1Abs, {true, false}},
      {Criterion::kC2Dp, {true, false}},
      {Criterion::kC2NonDp, {true, false}}};
  bool verdicts_ok = r.verdicts.size() == 8;
  for (size_t i = 0; verdicts_ok && i < 8; ++i) {
    const auto& [criterion, passes] = expected[i / 2];
    verdicts_ok = r.verdicts[i].criterion == criterion && r.verdicts[i].pass == passes[i % 2];
  }
  const bool rates_ok = r.failure_rate_c1 == 0.5 && r.failure_rate_c1_abs == 0.5 &&
                        r.failure_rate_c2_dp == 0.5 && r.failure_rate_c2_nondp == 0.5;
  // Relaxing every bound flips each failing verdict.
  const AuditReport loose = OrDie(
      BuildReport(before, after, {0, 1},
                  {.t1 = 0, .t_abs = 1.0, .epsilon = 2.1, .t2 = 2.0, .dp_mode = true}, "hand"));
  const bool loose_ok = loose.failure_rate_c1 == 0.5 && loose.failure_rate_c1_abs == 0.0 &&
                        loose.failure_rate_c2_dp == 0.0 && loose.failure_rate_c2_nondp == 0.0;
  return {verdicts_ok && rates_ok && loose_ok,
          absl::StrCat("verdicts ", verdicts_ok ? "match" : "differ", ", rates ",
                       rates_ok ? "match" : "differ", ", relaxed ", loose_ok ? "match" : "differ")};
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(UA_CLI) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / absl::StrCat("ua_accept_", name, "_", getpid());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Two runs each at one and four workers; every risk table and report must
// match byte for byte.
Outcome Criterion9() {
  const fs::path root = ScratchDir("determinism");
  const std::string config = std::string(UA_CONFIG_DIR) + "/small.json";
  std::vector<fs::path> runs;
  for (int workers : {1, 4}) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / absl::StrCat("w", workers, "_", rep);
      const int rc = RunCli(
          absl::StrCat("all --config ", config, " --out ", dir.string(), " --workers ", workers));
      if (rc != 0) return Fail(absl::StrCat("cmd all exited with ", rc));
      runs.push_back(dir);
    }
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(runs[0])) {
    const std::string name = entry.path().filename().string();
    const bool wanted = name.starts_with("risk-") || name.starts_with("after-") ||
                        name.starts_with("report-") || name.starts_with("verdicts-") ||
                        name.starts_with("sweep-");
    if (!wanted) continue;
    const std::string reference = Slurp(entry.path());
    for (size_t i = 1; i < runs.size(); ++i) {
      if (Slurp(runs[i] / name) != reference) {
        return Fail(absl::StrCat(name, " differs in ", runs[i].filename().string()));
      }
    }
    ++compared;
  }
  fs::remove_all(root);
  return {compared >= 5, absl::StrCat(compared, " artifacts identical across 4 runs")};
}

// The shipped default pipeline under the time and memory budget.
Outcome Criterion10() {
  const fs::path dir = ScratchDir("budget");
  const std::string config = std::string(UA_CONFIG_DIR) + "/default.json";
  const auto start = std::chrono::steady_clock::now();
  const int rc =
      RunCli(absl::StrCat("all --config ", config, " --out ", dir.string(), " --workers 4"));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rusage usage{};
  getrusage(RUSAGE_CHILDREN, &usage);
  const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
  fs::remove_all(dir);
  const bool pass = rc == 0 && seconds < 15 * 60 && peak_mb < 2048;
  return {pass, absl::StrFormat("exit %d, %.1f s, peak rss %.0f MB, %u hardware threads", rc,
                                seconds, peak_mb, std::thread::hardware_concurrency())};
}

}  // namespace
}  // namespace unlearn_audit

int main(int argc, char** argv) {
  using namespace unlearn_audit;
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion to run (repeatable); all when omitted")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) {
    selected.resize(10);
    std::iota(selected.begin(), selected.end(), 1);
  }
  const std::vector<std::function<Outcome()>> criteria = {
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9, Criterion10};
  bool all_pass = true;
  for (int n : selected) {
    const auto start = std::chrono::steady_clock::now();
    const Outcome outcome = criteria[static_cast<size_t>(n - 1)]();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "C" << n << " " << (outcome.pass ? "PASS" : "FAIL") << " (" << std::fixed
              << std::setprecision(1) << seconds << " s): " << outcome.detail << std::endl;
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
