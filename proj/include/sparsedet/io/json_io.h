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

#ifndef SPARSEDET_IO_JSON_IO_H_
#define SPARSEDET_IO_JSON_IO_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparsedet/boxes.h"
#include "sparsedet/metrics.h"
#include "sparsedet/model.h"
#include "sparsedet/scene.h"
#include "sparsedet/tracker.h"

namespace sparsedet::io {

// All writers emit two-space indented JSON with a trailing newline; the same
// input always produces the same bytes. Readers throw kParseError.

struct DetectionFrame {
  uint32_t frame_id = 0;
  double timestamp = 0.0;
  std::vector<Detection> detections;
};

// {"frame_id", "timestamp", "detections": [{"frame_id", "class", "score",
//   "center", "size", "yaw", "velocity", "query_voxel"}]}
// "velocity" is omitted for detections without one.
std::string detections_to_json(const DetectionFrame& frame, const HeadConfig& head);
// Query positions are rebuilt from query_voxel through the stride-8 grid.
DetectionFrame detections_from_json(const std::string& text, const ModelConfig& cfg);

// {"tracks": [{"frame_id", "id", "class", "center", "velocity"}]}
std::string tracks_to_json(std::span<const TrackOutput> tracks, const HeadConfig& head);
std::vector<TrackOutput> tracks_from_json(const std::string& text, const HeadConfig& head);

struct GroundTruthFrame {
  uint32_t frame_id = 0;
  double timestamp = 0.0;
  std::vector<GroundTruthBox> boxes;
};

// {"frames": [{"frame_id", "timestamp", "boxes": [{"object_id", "class",
//   "center", "size", "yaw", "velocity"}]}]}
std::string ground_truth_to_json(std::span<const GroundTruthFrame> frames,
                                 const HeadConfig& head);
std::vector<GroundTruthFrame> ground_truth_from_json(const std::string& text,
                                                     const HeadConfig& head);

std::string eval_report_to_json(const EvalReport& report, const HeadConfig& head);

// {"seed", "num_frames", "dt", "start_time", "start_frame", "surface_density",
//  "ground": {"z", "half_size", "density"},
//  "objects": [{"id", "class", "center", "size", "yaw", "velocity"}]}
// Every key except "objects" is optional, as are an object's "yaw" (0) and
// "velocity" (zero).
SceneSpec scene_spec_from_json(const std::string& text, const HeadConfig& head);

}  // namespace sparsedet::io

#endif  // SPARSEDET_IO_JSON_IO_H_
