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

#ifndef SPARSEDET_PARALLEL_H_
#define SPARSEDET_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace sparsedet {

// Process-wide worker count used by data-parallel loops. Results never depend
// on it: each loop body owns a disjoint output range.
void set_worker_threads(int threads);
int worker_threads();

// Calls fn(begin, end) over contiguous chunks of [0, n).
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn,
                  size_t min_chunk = 256);

}  // namespace sparsedet

#endif  // SPARSEDET_PARALLEL_H_
