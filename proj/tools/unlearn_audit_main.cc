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

// Command-line driver for the unlearning audit pipeline.
//
//   unlearn_audit all --config experiment.json [--out DIR] [--workers N]
//
// Exit codes: 0 success, 2 invalid config or arguments, 3 coverage error,
// 4 pipeline error (missing stage, foreign or corrupt outputs), 1 otherwise.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/match.h"
#include "unlearn_audit/config.h"
#include "unlearn_audit/pipeline.h"

namespace {

using unlearn_audit::Stage;

constexpr char kWorkersEnv[] = "UNLEARN_AUDIT_WORKERS";

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kCoverage = 3, kPipeline = 4 };

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return kOk;
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
      return kConfig;
    case absl::StatusCode::kFailedPrecondition:
      return absl::StartsWith(status.message(), "coverage:") ? kCoverage : kPipeline;
    case absl::StatusCode::kNotFound:
    case absl::StatusCode::kAlreadyExists:
    case absl::StatusCode::kDataLoss:
      return kPipeline;
    default:
      return kOther;
  }
}

int DefaultWorkers() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Flags {
  std::string config;
  std::optional<std::string> out;
  int workers = 1;
  bool overwrite = false;
};

int RunCommand(const Flags& flags, std::optional<Stage> stage) {
  absl::StatusOr<unlearn_audit::ExperimentConfig> config = unlearn_audit::LoadConfig(flags.config);
  if (!config.ok()) {
    std::cerr << "error: " << config.status().message() << "\n";
    return kConfig;
  }
  unlearn_audit::PipelineOptions options;
  options.out_dir = flags.out;
  options.workers = flags.workers;
  options.overwrite = flags.overwrite;
  options.log = [](absl::string_view line) { std::cerr << line << "\n"; };
  absl::StatusOr<unlearn_audit::Pipeline> pipeline =
      unlearn_audit::Pipeline::Open(*config, options);
  absl::Status status = pipeline.status();
  if (status.ok()) status = stage.has_value() ? pipeline->Run(*stage) : pipeline->RunAll();
  if (!status.ok()) {
    std::cerr << "error: " << status.message() << "\n";
    return ExitCodeFor(status);
  }
  std::cout << "run " << pipeline->config_hash().substr(0, 16) << " in " << pipeline->run_dir()
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-sample privacy audit of machine unlearning"};
  app.require_subcommand(1);
  Flags flags;
  flags.workers = DefaultWorkers();
  std::optional<Stage> chosen;

  auto add = [&](const std::string& name, const std::string& help, std::optional<Stage> stage) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& dir) { flags.out = dir; },
        "Output directory, overriding the config");
    sub->add_option(
           "--workers", flags.workers,
           std::string("Parallel workers (default: $") + kWorkersEnv + " or the core count)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--overwrite", flags.overwrite, "Replace outputs left by a different config");
    sub->callback([&chosen, stage] { chosen = stage; });
  };
  add("gen-data", "Generate or import the dataset", Stage::kGenData);
  add("train-pool", "Train the model pool on random halves", Stage::kTrainPool);
  add("attack-bench", "Compare A-LiRA, online and offline LiRA", Stage::kAttackBench);
  add("risk", "Estimate per-sample risk before unlearning", Stage::kRisk);
  add("unlearn", "Unlearn and re-estimate risk", Stage::kUnlearn);
  add("audit", "Check both criteria and write the report", Stage::kAudit);
  add("all", "Run every stage, resuming completed ones", std::nullopt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  return RunCommand(flags, chosen);
}
