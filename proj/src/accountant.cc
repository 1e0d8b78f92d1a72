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

#include <cmath>

#include "unlearn_audit/model.h"

namespace unlearn_audit {
namespace {

absl::Status ValidateAccountingArgs(int64_t steps, double delta) {
  if (steps < 0) return absl::InvalidArgumentError("steps must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("delta must be in (0, 1)");
  }
  return absl::OkStatus();
}

}  // namespace

// The minimizing order is alpha* = 1 + sigma * sqrt(2 ln(1/delta) / T), which
// gives the closed form T/(2 sigma^2) + sqrt(2 T ln(1/delta)) / sigma.
absl::StatusOr<double> AccountEpsilon(double noise_multiplier, int64_t steps, double delta) {
  absl::Status valid = ValidateAccountingArgs(steps, delta);
  if (!valid.ok()) return valid;
  if (!(noise_multiplier > 0.0) || !std::isfinite(noise_multiplier)) {
    return absl::InvalidArgumentError("noise_multiplier must be positive");
  }
  if (steps == 0) return 0.0;
  const double t = static_cast<double>(steps);
  const double log_inv_delta = -std::log(delta);
  return t / (2.0 * noise_multiplier * noise_multiplier) +
         std::sqrt(2.0 * t * log_inv_delta) / noise_multiplier;
}

// Solves (T/2) u^2 + sqrt(2 T ln(1/delta)) u = epsilon for u = 1/sigma.
absl::StatusOr<double> NoiseMultiplierForEpsilon(double epsilon, int64_t steps, double delta) {
  absl::Status valid = ValidateAccountingArgs(steps, delta);
  if (!valid.ok()) return valid;
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  if (steps == 0) {
    return absl::InvalidArgumentError("no noise multiplier is needed for zero steps");
  }
  const double t = static_cast<double>(steps);
  const double b = std::sqrt(2.0 * t * -std::log(delta));
  const double u = (-b + std::sqrt(b * b + 2.0 * t * epsilon)) / t;
  return 1.0 / u;
}

}  // namespace unlearn_audit
