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

#ifndef SPARSEDET_BOXES_H_
#define SPARSEDET_BOXES_H_

#include <array>
#include <cstdint>

#include "sparsedet/sparse_tensor.h"

namespace sparsedet {

// Upright 3D box in meters. `yaw` rotates the length axis counter-clockwise
// from +x.
struct Box3D {
  int cls = 0;
  std::array<double, 3> center = {0.0, 0.0, 0.0};
  std::array<double, 3> size = {1.0, 1.0, 1.0};  // length, width, height
  double yaw = 0.0;
  std::array<double, 2> velocity = {0.0, 0.0};
};

// Box annotation; `object_id` identifies the object across frames.
struct GroundTruthBox {
  Box3D box;
  uint32_t frame_id = 0;
  int64_t object_id = -1;
};

// One decoded prediction with the voxel it came from.
struct Detection {
  Box3D box;
  double score = 0.0;
  uint32_t frame_id = 0;
  Coord query_voxel = {0, 0, 0};              // stride-8 (x, y)
  std::array<double, 2> query_position = {0.0, 0.0};  // meters
  bool has_velocity = true;
};

}  // namespace sparsedet

#endif  // SPARSEDET_BOXES_H_
