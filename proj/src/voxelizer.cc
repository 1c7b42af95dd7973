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

#include "sparsedet/voxelizer.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "sparsedet/errors.h"

namespace sparsedet {

void GridConfig::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(range_min[a]) || !std::isfinite(range_max[a]) ||
        !(range_max[a] > range_min[a])) {
      fail(ErrorCode::kInvalidArgument,
           "grid range must satisfy max > min on axis " + std::to_string(a));
    }
    if (!std::isfinite(voxel_size[a]) || !(voxel_size[a] > 0.0)) {
      fail(ErrorCode::kInvalidArgument,
           "voxel size must be positive on axis " + std::to_string(a));
    }
  }
  const Coord e = extent();
  for (int a = 0; a < 3; ++a) {
    if (e[a] < 1 || e[a] > kMaxExtent) {
      fail(ErrorCode::kInvalidArgument, "grid extent out of range on axis " +
                                            std::to_string(a));
    }
  }
}

Coord GridConfig::extent() const {
  Coord e{};
  for (int a = 0; a < 3; ++a) {
    const double cells = (range_max[a] - range_min[a]) / voxel_size[a];
    const double n = std::ceil(cells - 1e-6);
    e[a] = static_cast<int32_t>(std::clamp(n, 1.0, static_cast<double>(kMaxExtent) + 1));
  }
  return e;
}

VoxelizeResult voxelize(const PointCloud& cloud, const GridConfig& grid) {
  grid.validate();
  const Coord extent = grid.extent();

  struct Binned {
    uint64_t key;
    Point p;
  };
  std::vector<Binned> binned;
  binned.reserve(cloud.points.size());
  for (const Point& p : cloud.points) {
    const double xyz[3] = {p.x, p.y, p.z};
    Coord c{};
    bool inside = std::isfinite(p.intensity);
    for (int a = 0; a < 3 && inside; ++a) {
      if (!std::isfinite(xyz[a]) || xyz[a] < grid.range_min[a] ||
          xyz[a] >= grid.range_max[a]) {
        inside = false;
        break;
      }
      const double cell = std::floor((xyz[a] - grid.range_min[a]) / grid.voxel_size[a]);
      // A point just below range_max can round into the cell past the end.
      c[a] = std::min(static_cast<int32_t>(cell), extent[a] - 1);
    }
    if (inside) binned.push_back({pack_coord(c), p});
  }

  VoxelizeResult result;
  result.points_kept = binned.size();
  result.points_clipped = cloud.points.size() - binned.size();

  std::sort(binned.begin(), binned.end(), [](const Binned& a, const Binned& b) {
    return std::tie(a.key, a.p.x, a.p.y, a.p.z, a.p.intensity) <
           std::tie(b.key, b.p.x, b.p.y, b.p.z, b.p.intensity);
  });

  std::vector<Coord> coords;
  std::vector<float> features;
  for (size_t begin = 0; begin < binned.size();) {
    size_t end = begin;
    while (end < binned.size() && binned[end].key == binned[begin].key) ++end;
    const Coord c = unpack_coord(binned[begin].key);
    double center[3];
    for (int a = 0; a < 3; ++a) {
      center[a] = grid.range_min[a] + (c[a] + 0.5) * grid.voxel_size[a];
    }
    double sum[4] = {0.0, 0.0, 0.0, 0.0};
    for (size_t k = begin; k < end; ++k) {
      const Point& p = binned[k].p;
      sum[0] += p.x - center[0];
      sum[1] += p.y - center[1];
      sum[2] += p.z - center[2];
      sum[3] += p.intensity;
    }
    const double n = static_cast<double>(end - begin);
    coords.push_back(c);
    for (double s : sum) features.push_back(static_cast<float>(s / n));
    features.push_back(static_cast<float>(n / kCountScale));
    begin = end;
  }

  result.empty_frame = coords.empty();
  result.tensor = SparseTensor::from_canonical(3, std::move(coords),
                                               std::move(features),
                                               kVoxelChannels, 1, extent);
  return result;
}

}  // namespace sparsedet
