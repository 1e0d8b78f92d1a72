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

#include "unlearn_audit/manifest.h"

#include <filesystem>
#include <fstream>
#include <iterator>

#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"
#include "unlearn_audit/config.h"

namespace unlearn_audit {

using nlohmann::json;

absl::StatusOr<std::string> FileSha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Sha256Hex(bytes);
}

bool RunManifest::StageValid(const std::string& stage, const std::string& run_dir) const {
  auto it = stages.find(stage);
  if (it == stages.end()) return false;
  for (const auto& [relative, digest] : it->second.artifacts) {
    absl::StatusOr<std::string> actual =
        FileSha256((std::filesystem::path(run_dir) / relative).string());
    if (!actual.ok() || *actual != digest) return false;
  }
  return true;
}

absl::StatusOr<RunManifest> ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("no manifest at ", path));
  json root = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_object() || !root.contains("config_hash") ||
      !root["config_hash"].is_string() || !root.contains("stages") || !root["stages"].is_object()) {
    return absl::DataLossError(absl::StrCat("malformed manifest ", path));
  }
  RunManifest manifest;
  manifest.config_hash = root["config_hash"].get<std::string>();
  for (const auto& [name, stage] : root["stages"].items()) {
    if (!stage.is_object() || !stage.contains("artifacts") || !stage["artifacts"].is_object()) {
      return absl::DataLossError(absl::StrCat("malformed stage ", name, " in ", path));
    }
    StageRecord record;
    for (const auto& [file, digest] : stage["artifacts"].items()) {
      if (!digest.is_string()) return absl::DataLossError("artifact digests must be strings");
      record.artifacts[file] = digest.get<std::string>();
    }
    if (stage.contains("wall_clock_seconds") && stage["wall_clock_seconds"].is_number()) {
      record.wall_clock_seconds = stage["wall_clock_seconds"].get<double>();
    }
    manifest.stages[name] = std::move(record);
  }
  return manifest;
}

absl::Status WriteManifest(const RunManifest& manifest, const std::string& path) {
  json stages = json::object();
  for (const auto& [name, record] : manifest.stages) {
    stages[name] = {{"artifacts", record.artifacts},
                    {"wall_clock_seconds", record.wall_clock_seconds}};
  }
  json root = {{"config_hash", manifest.config_hash}, {"stages", stages}};
  const std::string temp = path + ".tmp";
  {
    std::ofstream out(temp, std::ios::trunc);
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", temp));
    out << root.dump(2) << "\n";
    if (!out) return absl::InternalError(absl::StrCat("write failed for ", temp));
  }
  std::error_code error;
  std::filesystem::rename(temp, path, error);
  if (error)
    return absl::InternalError(absl::StrCat("cannot rename ", temp, ": ", error.message()));
  return absl::OkStatus();
}

}  // namespace unlearn_audit
