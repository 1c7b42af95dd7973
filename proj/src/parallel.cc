// Copyright 2026 The Sparsedet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sparsedet/parallel.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace sparsedet {

namespace {
std::atomic<int> g_worker_threads{1};
}  // namespace

void set_worker_threads(int threads) {
  g_worker_threads.store(std::max(1, threads));
}

int worker_threads() { return g_worker_threads.load(); }

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn,
                  size_t min_chunk) {
  if (n == 0) return;
  const size_t max_workers = (n + min_chunk - 1) / std::max<size_t>(min_chunk, 1);
  const size_t workers = std::min<size_t>(
      static_cast<size_t>(worker_threads()), std::max<size_t>(max_workers, 1));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sparsedet
