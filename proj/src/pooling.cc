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

#include "sparsedet/pooling.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "sparsedet/conv.h"
#include "sparsedet/errors.h"

namespace sparsedet {

std::vector<size_t> sparse_max_pool_rows(const SparseTensor& scores,
                                         int channel, int kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    fail(ErrorCode::kInvalidArgument,
         "pooling kernel must be odd, got " + std::to_string(kernel_size));
  }
  if (channel < 0 || channel >= scores.channels()) {
    fail(ErrorCode::kChannelMismatch, "pooling channel out of range");
  }
  const auto offsets = kernel_offsets(scores.dims(), kernel_size);
  const size_t width = static_cast<size_t>(scores.channels());
  const auto values = scores.features();
  std::vector<size_t> kept;
  for (size_t i = 0; i < scores.size(); ++i) {
    const Coord& c = scores.coord(i);
    const float mine = values[i * width + channel];
    bool is_max = true;
    for (const Coord& o : offsets) {
      const auto j = scores.find({c[0] + o[0], c[1] + o[1], c[2] + o[2]});
      if (!j || *j == i) continue;
      const float other = values[*j * width + channel];
      // Rows are canonical, so row order decides precedence.
      if (other > mine || (*j < i && other == mine)) {
        is_max = false;
        break;
      }
    }
    if (is_max) kept.push_back(i);
  }
  return kept;
}

std::vector<Coord> sparse_max_pool(const SparseTensor& scores, int kernel_size) {
  if (scores.channels() != 1) {
    fail(ErrorCode::kChannelMismatch,
         "sparse_max_pool expects one score channel, got " +
             std::to_string(scores.channels()));
  }
  std::vector<Coord> out;
  for (size_t row : sparse_max_pool_rows(scores, 0, kernel_size)) {
    out.push_back(scores.coord(row));
  }
  return out;
}

SparseTensor height_compress(const SparseTensor& t) {
  if (t.dims() != 3) {
    fail(ErrorCode::kInvalidArgument, "height compression needs a 3D tensor");
  }
  const Coord extent = {t.extent()[0], t.extent()[1], 1};
  const size_t width = static_cast<size_t>(t.channels());

  // Canonical (z, y, x) input order: a stable sort on (y, x) leaves each
  // column's voxels in ascending z.
  std::vector<size_t> order(t.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto column_key = [&](size_t r) {
    const Coord& c = t.coord(r);
    return pack_coord({c[0], c[1], 0});
  };
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return column_key(a) < column_key(b);
  });

  std::vector<Coord> coords;
  std::vector<float> features;
  uint64_t last = ~uint64_t{0};
  for (size_t r : order) {
    const uint64_t key = column_key(r);
    const auto f = t.row(r);
    if (key != last) {
      coords.push_back({t.coord(r)[0], t.coord(r)[1], 0});
      features.insert(features.end(), f.begin(), f.end());
      last = key;
      continue;
    }
    float* dst = features.data() + (coords.size() - 1) * width;
    for (size_t c = 0; c < width; ++c) dst[c] += f[c];
  }
  return SparseTensor::from_canonical(2, std::move(coords), std::move(features),
                                      t.channels(), t.stride(), extent);
}

}  // namespace sparsedet
