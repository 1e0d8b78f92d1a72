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

#ifndef UNLEARN_AUDIT_DATA_H_
#define UNLEARN_AUDIT_DATA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "absl/types/span.h"

namespace unlearn_audit {

// One labelled example. `id` is stable for the whole experiment and equals
// the sample's position in its Dataset.
struct Sample {
  int64_t id = 0;
  std::vector<double> features;
  int label = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Row-major single-channel image layout for the feature vector.
struct GridLayout {
  int height = 0;
  int width = 0;

  friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;
  int feature_dim = 0;
  // Absent means the features are a flat, unstructured vector.
  std::optional<GridLayout> grid;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  const Sample& at(int64_t id) const { return samples[static_cast<size_t>(id)]; }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Checks the Dataset invariants: dense ids 0..n-1, shared feature_dim,
// finite features, labels in range, every class present, grid area.
absl::Status ValidateDataset(const Dataset& dataset);

// Membership of each sample (indexed by id) in one model's training set.
class SplitMask {
 public:
  SplitMask() = default;
  explicit SplitMask(int64_t size) : bits_(static_cast<size_t>(size), 0) {}
  explicit SplitMask(std::vector<uint8_t> bits) : bits_(std::move(bits)) {}

  int64_t size() const { return static_cast<int64_t>(bits_.size()); }
  bool contains(int64_t id) const { return bits_[static_cast<size_t>(id)] != 0; }
  void set(int64_t id, bool member) { bits_[static_cast<size_t>(id)] = member ? 1 : 0; }
  int64_t count() const;
  // Member ids in ascending order.
  std::vector<int64_t> members() const;
  const std::vector<uint8_t>& bits() const { return bits_; }

  // "0101..." with one character per sample.
  std::string ToString() const;
  static absl::StatusOr<SplitMask> FromString(const std::string& text);

  friend bool operator==(const SplitMask&, const SplitMask&) = default;

 private:
  std::vector<uint8_t> bits_;
};

// Adds zero-mean Gaussian noise of scale `eta` to every feature.
struct JitterAugmentation {
  double eta = 0.0;
};

// Random horizontal flip (probability 1/2 when allowed) followed by an
// integer shift in [-max_shift, max_shift] along each axis, zero padded.
struct GridAugmentation {
  bool allow_flip = true;
  int max_shift = 0;
};

using AugmentationScheme = std::variant<JitterAugmentation, GridAugmentation>;

absl::Status ValidateScheme(const AugmentationScheme& scheme,
                            const std::optional<GridLayout>& grid);

// Class-balanced Gaussian clusters around random unit-sphere centroids.
absl::StatusOr<Dataset> GenerateSynthetic(int64_t n_samples, int num_classes, int feature_dim,
                                          double cluster_spread, uint64_t seed);

// Reads comma-delimited rows (features..., label). Ids follow row order.
absl::StatusOr<Dataset> LoadDelimited(const std::string& path, int num_classes);

// Writes the format LoadDelimited reads, with round-trip exact numbers.
absl::Status WriteDelimited(const Dataset& dataset, const std::string& path);

// Draws `n` augmented copies of `sample`. Labels and ids are preserved.
// `grid` must be set for a GridAugmentation scheme.
absl::StatusOr<std::vector<Sample>> Augment(const Sample& sample, int n,
                                            const AugmentationScheme& scheme, uint64_t seed,
                                            const std::optional<GridLayout>& grid = std::nullopt);

// Flips a row-major grid horizontally and shifts it by (dy, dx) with zero
// padding. Exposed for testing the augmentation transforms.
std::vector<double> TransformGrid(absl::Span<const double> pixels, const GridLayout& grid,
                                  bool flip, int dy, int dx);

// Exactly floor(n/2) members, chosen uniformly.
absl::StatusOr<SplitMask> RandomHalfSplit(int64_t n, uint64_t seed);

// Round-trip exact decimal text for a double; non-finite values print as
// "inf", "-inf" and "nan".
std::string FormatDouble(double value);

// Whole-field parsers for delimited text; surrounding whitespace is ignored.
absl::StatusOr<double> ParseDouble(absl::string_view text);
absl::StatusOr<int64_t> ParseInt(absl::string_view text);

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_DATA_H_
