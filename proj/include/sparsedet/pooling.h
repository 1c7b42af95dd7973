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

#ifndef SPARSEDET_POOLING_H_
#define SPARSEDET_POOLING_H_

#include <vector>

#include "sparsedet/sparse_tensor.h"

namespace sparsedet {

// Local-maximum selection over active sites only. A site survives when its
// score is >= every active neighbor inside the kernel window and strictly
// greater than neighbors that precede it canonically, so among exact ties
// only the canonically first site remains. Requires a single-channel tensor.
std::vector<Coord> sparse_max_pool(const SparseTensor& scores, int kernel_size);

// Same rule on one channel of a multi-channel tensor; returns surviving rows
// in canonical order.
std::vector<size_t> sparse_max_pool_rows(const SparseTensor& scores,
                                         int channel, int kernel_size);

// Drops z and sums features of voxels sharing (x, y). Contributions to a
// column are added in ascending z.
SparseTensor height_compress(const SparseTensor& t);

}  // namespace sparsedet

#endif  // SPARSEDET_POOLING_H_
