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

#ifndef UNLEARN_AUDIT_RANDOM_H_
#define UNLEARN_AUDIT_RANDOM_H_

#include <cstdint>
#include <random>

namespace unlearn_audit {

// Every random draw in the project goes through this engine so that results
// are a pure function of the seeds passed in.
using Rng = std::mt19937_64;

// Builds an engine for the (seed, stream) pair. Distinct streams from one seed
// give independent-looking sequences.
inline Rng MakeRng(uint64_t seed, uint64_t stream = 0) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)};
  return Rng(seq);
}

// A child seed for `stream`, used to fan one configured seed out to many
// independent jobs.
inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) { return MakeRng(seed, stream)(); }

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_RANDOM_H_
