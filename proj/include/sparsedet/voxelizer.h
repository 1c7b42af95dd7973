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

#ifndef SPARSEDET_VOXELIZER_H_
#define SPARSEDET_VOXELIZER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sparsedet/sparse_tensor.h"

namespace sparsedet {

// Voxelization geometry. Defaults cover +-54 m in x/y and [-5, 3] m in z
// with 0.075 x 0.075 x 0.2 m voxels.
struct GridConfig {
  std::array<double, 3> range_min = {-54.0, -54.0, -5.0};
  std::array<double, 3> range_max = {54.0, 54.0, 3.0};
  std::array<double, 3> voxel_size = {0.075, 0.075, 0.2};

  void validate() const;
  // ceil((max - min) / size) per axis, tolerant to representation error.
  Coord extent() const;
};

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  double timestamp = 0.0;
  uint32_t frame_id = 0;
};

// Channels of a stride-1 voxel: mean point offset from the voxel center
// (x, y, z, meters), mean intensity and point count / kCountScale.
inline constexpr int kVoxelChannels = 5;
inline constexpr float kCountScale = 32.0f;

struct VoxelizeResult {
  SparseTensor tensor;
  size_t points_kept = 0;
  size_t points_clipped = 0;
  // No voxel survived clipping; a warning, not an error.
  bool empty_frame = false;
};

// Bins points into the half-open range [range_min, range_max). Points inside
// a voxel are sorted before averaging, so the result is independent of the
// input point order.
VoxelizeResult voxelize(const PointCloud& cloud, const GridConfig& grid);

}  // namespace sparsedet

#endif  // SPARSEDET_VOXELIZER_H_
