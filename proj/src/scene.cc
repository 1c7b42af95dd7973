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

#include "sparsedet/scene.h"

#include <cmath>
#include <random>

#include "sparsedet/errors.h"

namespace sparsedet {

namespace {

// Points on the surface of `box` in world coordinates.
void sample_box(const Box3D& box, double density, std::mt19937_64& rng,
                std::vector<Point>& out) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<float> intensity(0.0f, 1.0f);
  const double l = box.size[0];
  const double w = box.size[1];
  const double h = box.size[2];
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // Each face: the fixed axis, its sign, and the face area.
  struct Face {
    int axis;
    double sign;
    double area;
  };
  const Face faces[] = {{0, 1.0, w * h},  {0, -1.0, w * h}, {1, 1.0, l * h},
                        {1, -1.0, l * h}, {2, 1.0, l * w},  {2, -1.0, l * w}};
  for (const Face& f : faces) {
    const auto n = static_cast<int>(std::lround(f.area * density));
    for (int i = 0; i < n; ++i) {
      std::array<double, 3> local = {unit(rng) * l, unit(rng) * w, unit(rng) * h};
      local[static_cast<size_t>(f.axis)] = 0.5 * f.sign * box.size[static_cast<size_t>(f.axis)];
      Point p;
      p.x = static_cast<float>(box.center[0] + c * local[0] - s * local[1]);
      p.y = static_cast<float>(box.center[1] + s * local[0] + c * local[1]);
      p.z = static_cast<float>(box.center[2] + local[2]);
      p.intensity = intensity(rng);
      out.push_back(p);
    }
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (num_frames < 1) fail(ErrorCode::kInvalidArgument, "scene needs at least one frame");
  if (!(dt > 0.0)) fail(ErrorCode::kInvalidArgument, "scene dt must be positive");
  if (!(surface_density >= 0.0) || !(ground_density >= 0.0)) {
    fail(ErrorCode::kInvalidArgument, "point densities must be non-negative");
  }
  if (ground && !(ground_half_size > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "ground_half_size must be positive");
  }
  for (const auto& obj : objects) {
    for (double v : obj.box.size) {
      if (!(v > 0.0)) {
        fail(ErrorCode::kDegenerateBox,
             "object " + std::to_string(obj.id) + " has a non-positive size");
      }
    }
  }
}

Box3D object_at(const SceneObject& obj, const SceneSpec& spec, int index) {
  Box3D box = obj.box;
  const double t = spec.dt * index;
  box.center[0] += box.velocity[0] * t;
  box.center[1] += box.velocity[1] * t;
  return box;
}

std::vector<SceneFrame> generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::vector<SceneFrame> frames;
  for (int f = 0; f < spec.num_frames; ++f) {
    // One stream per frame so frames can be regenerated independently.
    std::seed_seq seq{static_cast<uint32_t>(spec.seed), static_cast<uint32_t>(spec.seed >> 32),
                      static_cast<uint32_t>(f)};
    std::mt19937_64 rng(seq);
    SceneFrame frame;
    frame.cloud.frame_id = spec.start_frame + static_cast<uint32_t>(f);
    frame.cloud.timestamp = spec.start_time + spec.dt * f;
    for (const auto& obj : spec.objects) {
      const Box3D box = object_at(obj, spec, f);
      sample_box(box, spec.surface_density, rng, frame.cloud.points);
      frame.boxes.push_back({box, frame.cloud.frame_id, obj.id});
    }
    if (spec.ground) {
      const double side = 2.0 * spec.ground_half_size;
      const auto n = static_cast<int>(std::lround(side * side * spec.ground_density));
      std::uniform_real_distribution<double> pos(-spec.ground_half_size, spec.ground_half_size);
      std::uniform_real_distribution<float> intensity(0.0f, 1.0f);
      for (int i = 0; i < n; ++i) {
        Point p;
        p.x = static_cast<float>(pos(rng));
        p.y = static_cast<float>(pos(rng));
        p.z = static_cast<float>(spec.ground_z);
        p.intensity = intensity(rng);
        frame.cloud.points.push_back(p);
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace sparsedet
