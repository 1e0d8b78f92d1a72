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

#ifndef UNLEARN_AUDIT_MANIFEST_H_
#define UNLEARN_AUDIT_MANIFEST_H_

#include <map>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace unlearn_audit {

struct StageRecord {
  // Artifact path relative to the run directory -> SHA-256 of its bytes.
  std::map<std::string, std::string> artifacts;
  double wall_clock_seconds = 0.0;

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

// Completion markers for one run directory. A stage is listed only once all
// of its artifacts were written; it counts as complete while every listed
// artifact still exists with the recorded checksum.
struct RunManifest {
  std::string config_hash;
  std::map<std::string, StageRecord> stages;

  bool StageValid(const std::string& stage, const std::string& run_dir) const;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

// NotFound when the file does not exist; DataLoss when it cannot be parsed.
absl::StatusOr<RunManifest> ReadManifest(const std::string& path);

// Written through a temporary file and renamed into place.
absl::Status WriteManifest(const RunManifest& manifest, const std::string& path);

absl::StatusOr<std::string> FileSha256(const std::string& path);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_MANIFEST_H_
