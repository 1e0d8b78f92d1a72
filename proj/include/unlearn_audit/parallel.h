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

#ifndef UNLEARN_AUDIT_PARALLEL_H_
#define UNLEARN_AUDIT_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "absl/status/status.h"

namespace unlearn_audit {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each task must write
// only to its own output slot. When several tasks fail, the error of the
// lowest index is returned so the outcome does not depend on scheduling.
inline absl::Status ParallelFor(int64_t n, int workers,
                                const std::function<absl::Status(int64_t)>& fn) {
  if (n <= 0) return absl::OkStatus();
  std::vector<absl::Status> results(static_cast<size_t>(n));
  const int threads = static_cast<int>(std::clamp<int64_t>(workers, 1, n));
  if (threads == 1) {
    for (int64_t i = 0; i < n; ++i) results[i] = fn(i);
  } else {
    std::atomic<int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int64_t i = next++; i < n; i = next++) results[i] = fn(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& s : results) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace unlearn_audit

#endif  // UNLEARN_AUDIT_PARALLEL_H_
