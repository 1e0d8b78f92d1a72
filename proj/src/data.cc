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

#include "unlearn_audit/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "unlearn_audit/random.h"

namespace unlearn_audit {

absl::StatusOr<double> ParseDouble(absl::string_view text) {
  text = absl::StripAsciiWhitespace(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return absl::DataLossError(absl::StrCat("not a number: '", text, "'"));
  }
  return value;
}

absl::StatusOr<int64_t> ParseInt(absl::string_view text) {
  text = absl::StripAsciiWhitespace(text);
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return absl::DataLossError(absl::StrCat("not an integer: '", text, "'"));
  }
  return value;
}

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

absl::Status ValidateDataset(const Dataset& dataset) {
  if (dataset.num_classes <= 0 || dataset.feature_dim <= 0) {
    return absl::InvalidArgumentError("num_classes and feature_dim must be positive");
  }
  if (dataset.grid.has_value() &&
      (dataset.grid->height <= 0 || dataset.grid->width <= 0 ||
       dataset.grid->height * dataset.grid->width != dataset.feature_dim)) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid ", dataset.grid->height, "x", dataset.grid->width,
                     " does not match feature_dim ", dataset.feature_dim));
  }
  std::vector<bool> seen(static_cast<size_t>(dataset.num_classes), false);
  for (int64_t i = 0; i < dataset.size(); ++i) {
    const Sample& s = dataset.samples[static_cast<size_t>(i)];
    if (s.id != i) {
      return absl::InvalidArgumentError(absl::StrCat("sample at position ", i, " has id ", s.id));
    }
    if (static_cast<int>(s.features.size()) != dataset.feature_dim) {
      return absl::InvalidArgumentError(absl::StrCat("sample ", i, " has ", s.features.size(),
                                                     " features, expected ", dataset.feature_dim));
    }
    for (double f : s.features) {
      if (!std::isfinite(f)) {
        return absl::InvalidArgumentError(absl::StrCat("sample ", i, " has a non-finite feature"));
      }
    }
    if (s.label < 0 || s.label >= dataset.num_classes) {
      return absl::OutOfRangeError(absl::StrCat("sample ", i, " label ", s.label, " outside [0, ",
                                                dataset.num_classes, ")"));
    }
    seen[static_cast<size_t>(s.label)] = true;
  }
  for (int c = 0; c < dataset.num_classes; ++c) {
    if (!seen[static_cast<size_t>(c)]) {
      return absl::InvalidArgumentError(absl::StrCat("class ", c, " is absent"));
    }
  }
  return absl::OkStatus();
}

int64_t SplitMask::count() const { return std::count(bits_.begin(), bits_.end(), uint8_t{1}); }

std::vector<int64_t> SplitMask::members() const {
  std::vector<int64_t> out;
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(static_cast<int64_t>(i));
  }
  return out;
}

std::string SplitMask::ToString() const {
  std::string out(bits_.size(), '0');
  for (size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i] = '1';
  }
  return out;
}

absl::StatusOr<SplitMask> SplitMask::FromString(const std::string& text) {
  std::vector<uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0' || c == '1') {
      bits.push_back(c == '1');
    } else if (c != '\n' && c != '\r') {
      return absl::DataLossError(absl::StrCat("bad mask character '", std::string(1, c), "'"));
    }
  }
  return SplitMask(std::move(bits));
}

absl::Status ValidateScheme(const AugmentationScheme& scheme,
                            const std::optional<GridLayout>& grid) {
  if (const auto* jitter = std::get_if<JitterAugmentation>(&scheme)) {
    if (!(jitter->eta >= 0.0) || !std::isfinite(jitter->eta)) {
      return absl::InvalidArgumentError("jitter eta must be finite and >= 0");
    }
    return absl::OkStatus();
  }
  const auto& g = std::get<GridAugmentation>(scheme);
  if (g.max_shift < 0) {
    return absl::InvalidArgumentError("max_shift must be >= 0");
  }
  if (!grid.has_value()) {
    return absl::InvalidArgumentError("grid augmentation requires a grid-layout dataset");
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> GenerateSynthetic(int64_t n_samples, int num_classes, int feature_dim,
                                          double cluster_spread, uint64_t seed) {
  if (num_classes <= 0 || feature_dim <= 0 || n_samples < num_classes) {
    return absl::InvalidArgumentError(absl::StrCat("invalid sizes: n_samples=", n_samples,
                                                   " num_classes=", num_classes,
                                                   " feature_dim=", feature_dim));
  }
  if (!(cluster_spread > 0.0) || !std::isfinite(cluster_spread)) {
    return absl::InvalidArgumentError("cluster_spread must be positive");
  }
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> centroids(static_cast<size_t>(num_classes));
  for (auto& c : centroids) {
    double norm = 0.0;
    do {
      c.assign(static_cast<size_t>(feature_dim), 0.0);
      norm = 0.0;
      for (double& v : c) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : c) v /= norm;
  }

  std::vector<int> labels(static_cast<size_t>(n_samples));
  for (int64_t i = 0; i < n_samples; ++i) {
    labels[static_cast<size_t>(i)] = static_cast<int>(i % num_classes);
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset dataset;
  dataset.num_classes = num_classes;
  dataset.feature_dim = feature_dim;
  dataset.samples.resize(static_cast<size_t>(n_samples));
  for (int64_t i = 0; i < n_samples; ++i) {
    Sample& s = dataset.samples[static_cast<size_t>(i)];
    s.id = i;
    s.label = labels[static_cast<size_t>(i)];
    const auto& c = centroids[static_cast<size_t>(s.label)];
    s.features.resize(static_cast<size_t>(feature_dim));
    for (int d = 0; d < feature_dim; ++d) {
      s.features[static_cast<size_t>(d)] = c[static_cast<size_t>(d)] + cluster_spread * normal(rng);
    }
  }
  return dataset;
}

absl::StatusOr<Dataset> LoadDelimited(const std::string& path, int num_classes) {
  if (num_classes <= 0) {
    return absl::InvalidArgumentError("num_classes must be positive");
  }
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));

  Dataset dataset;
  dataset.num_classes = num_classes;
  std::string line;
  int64_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    absl::string_view view = absl::StripAsciiWhitespace(line);
    if (view.empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(view, ',');
    if (fields.size() < 2) {
      return absl::DataLossError(
          absl::StrCat(path, ": row ", row, ": need at least one feature and a label"));
    }
    const int dim = static_cast<int>(fields.size()) - 1;
    if (dataset.feature_dim == 0) {
      dataset.feature_dim = dim;
    } else if (dim != dataset.feature_dim) {
      return absl::DataLossError(absl::StrCat(path, ": row ", row, ": expected ",
                                              dataset.feature_dim, " features, found ", dim));
    }
    Sample s;
    s.id = dataset.size();
    s.features.reserve(static_cast<size_t>(dim));
    for (int d = 0; d < dim; ++d) {
      auto value = ParseDouble(fields[static_cast<size_t>(d)]);
      if (!value.ok()) {
        return absl::DataLossError(
            absl::StrCat(path, ": row ", row, ": ", value.status().message()));
      }
      s.features.push_back(*value);
    }
    auto label = ParseInt(fields.back());
    if (!label.ok()) {
      return absl::DataLossError(absl::StrCat(path, ": row ", row, ": ", label.status().message()));
    }
    if (*label < 0 || *label >= num_classes) {
      return absl::OutOfRangeError(
          absl::StrCat(path, ": row ", row, ": label ", *label, " outside [0, ", num_classes, ")"));
    }
    s.label = static_cast<int>(*label);
    dataset.samples.push_back(std::move(s));
  }
  if (dataset.samples.empty()) {
    return absl::DataLossError(absl::StrCat(path, ": no rows"));
  }
  absl::Status valid = ValidateDataset(dataset);
  if (!valid.ok()) {
    return absl::Status(valid.code(), absl::StrCat(path, ": ", valid.message()));
  }
  return dataset;
}

absl::Status WriteDelimited(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  for (const Sample& s : dataset.samples) {
    for (double f : s.features) out << FormatDouble(f) << ',';
    out << s.label << '\n';
  }
  out.flush();
  if (!out) return absl::UnavailableError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

std::vector<double> TransformGrid(absl::Span<const double> pixels, const GridLayout& grid,
                                  bool flip, int dy, int dx) {
  const int h = grid.height;
  const int w = grid.width;
  std::vector<double> out(pixels.size(), 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      // Output pixel (r, c) reads from the flipped image at (r - dy, c - dx).
      const int sr = r - dy;
      int sc = c - dx;
      if (sr < 0 || sr >= h || sc < 0 || sc >= w) continue;
      if (flip) sc = w - 1 - sc;
      out[static_cast<size_t>(r * w + c)] = pixels[static_cast<size_t>(sr * w + sc)];
    }
  }
  return out;
}

absl::StatusOr<std::vector<Sample>> Augment(const Sample& sample, int n,
                                            const AugmentationScheme& scheme, uint64_t seed,
                                            const std::optional<GridLayout>& grid) {
  if (n < 0) return absl::InvalidArgumentError("n must be >= 0");
  absl::Status valid = ValidateScheme(scheme, grid);
  if (!valid.ok()) return valid;
  if (grid.has_value() && grid->height * grid->width != static_cast<int>(sample.features.size())) {
    return absl::InvalidArgumentError("sample does not match grid layout");
  }

  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(n));
  Rng rng = MakeRng(seed);
  if (const auto* jitter = std::get_if<JitterAugmentation>(&scheme)) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      Sample copy = sample;
      if (jitter->eta > 0.0) {
        for (double& f : copy.features) f += jitter->eta * normal(rng);
      }
      out.push_back(std::move(copy));
    }
    return out;
  }

  const auto& g = std::get<GridAugmentation>(scheme);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> shift(-g.max_shift, g.max_shift);
  for (int i = 0; i < n; ++i) {
    const bool flip = g.allow_flip && coin(rng);
    const int dy = shift(rng);
    const int dx = shift(rng);
    Sample copy = sample;
    copy.features = TransformGrid(sample.features, *grid, flip, dy, dx);
    out.push_back(std::move(copy));
  }
  return out;
}

absl::StatusOr<SplitMask> RandomHalfSplit(int64_t n, uint64_t seed) {
  if (n < 2) return absl::InvalidArgumentError("random half split needs n >= 2");
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), int64_t{0});
  Rng rng = MakeRng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitMask mask(n);
  for (int64_t i = 0; i < n / 2; ++i) mask.set(order[static_cast<size_t>(i)], true);
  return mask;
}

}  // namespace unlearn_audit
