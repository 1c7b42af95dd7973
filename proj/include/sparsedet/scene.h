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

#ifndef SPARSEDET_SCENE_H_
#define SPARSEDET_SCENE_H_

#include <array>
#include <cstdint>
#include <vector>

#include "sparsedet/boxes.h"
#include "sparsedet/voxelizer.h"

namespace sparsedet {

// A box moving at constant velocity; `box.center` is its position at frame 0.
struct SceneObject {
  int64_t id = 0;
  Box3D box;
};

struct SceneSpec {
  uint64_t seed = 0;
  int num_frames = 1;
  double dt = 0.1;          // seconds between frames
  double start_time = 0.0;
  uint32_t start_frame = 0;
  double surface_density = 30.0;  // points per square meter of box surface
  bool ground = false;
  double ground_z = -2.0;
  double ground_half_size = 20.0;  // square patch centered on the origin
  double ground_density = 0.2;     // points per square meter
  std::vector<SceneObject> objects;

  void validate() const;
};

struct SceneFrame {
  PointCloud cloud;
  std::vector<GroundTruthBox> boxes;
};

// Box at frame `index` of the spec (center advanced by velocity * t).
Box3D object_at(const SceneObject& obj, const SceneSpec& spec, int index);

// Points are drawn on the six faces of every box, proportionally to face
// area, plus an optional flat ground patch. Deterministic for a given seed.
std::vector<SceneFrame> generate_scene(const SceneSpec& spec);

}  // namespace sparsedet

#endif  // SPARSEDET_SCENE_H_
