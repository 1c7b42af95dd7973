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

#ifndef SPARSEDET_METRICS_H_
#define SPARSEDET_METRICS_H_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sparsedet/boxes.h"

namespace sparsedet {

using Vec2 = std::array<double, 2>;

// Counter-clockwise footprint corners of a box.
std::array<Vec2, 4> bev_corners(const Box3D& box);

// Signed shoelace area; positive for counter-clockwise polygons.
double polygon_area(std::span<const Vec2> polygon);

// Clips `subject` against the convex counter-clockwise polygon `clip`.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

// Footprint intersection area, IoU in bird's-eye view, and volumetric IoU of
// upright boxes (footprint intersection times vertical overlap). Throw
// kDegenerateBox when a size component is not positive.
double intersection_bev(const Box3D& a, const Box3D& b);
double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

struct ClassScore {
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  int num_gt = 0;
  int num_detections = 0;
  // 0/0 conventions: no detections -> precision 1, no boxes -> recall 1.
  double precision = 1.0;
  double recall = 1.0;
};

struct EvalReport {
  double iou_threshold = 0.5;
  std::map<int, ClassScore> per_class;
  double mean_precision = 1.0;
  double mean_recall = 1.0;
  std::optional<int> id_switches;
};

// Greedy matching per frame and class: detections in descending score take
// the unmatched box with the highest BEV IoU, counted as a hit when that IoU
// reaches `iou_threshold`. Each box is matched at most once.
EvalReport match_and_score(std::span<const Detection> detections,
                           std::span<const GroundTruthBox> boxes,
                           double iou_threshold = 0.5);

}  // namespace sparsedet

#endif  // SPARSEDET_METRICS_H_
