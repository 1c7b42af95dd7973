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

#ifndef SPARSEDET_HEAD_H_
#define SPARSEDET_HEAD_H_

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparsedet/boxes.h"
#include "sparsedet/conv.h"
#include "sparsedet/flops.h"
#include "sparsedet/sparse_tensor.h"
#include "sparsedet/voxelizer.h"

namespace sparsedet {

struct HeadConfig {
  int num_classes = 10;
  std::vector<std::string> class_names = {
      "car",     "truck",      "construction_vehicle", "bus",        "trailer",
      "barrier", "motorcycle", "bicycle",              "pedestrian", "traffic_cone"};
  // class -> prediction group; classes of one group share prediction layers.
  std::vector<int> class_group = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int head_kernel = 3;  // 1 is a per-voxel fully connected layer
  // Pooling window per group: 7 for large vehicles, 3 otherwise.
  std::vector<int> maxpool_kernel = {7, 7, 7, 7, 7, 3, 3, 3, 3, 3};
  double score_threshold = 0.1;
  int max_detections = 500;
  bool regress_velocity = true;
  int in_channels = 128;

  int num_groups() const;
  // Classes of `group` in ascending class order.
  std::vector<int> group_classes(int group) const;
  int regression_width() const { return regress_velocity ? 10 : 8; }
  int class_index(const std::string& name) const;  // -1 when unknown
  std::string class_name(int cls) const;
  void validate() const;
};

// Per group: a score layer (group size outputs) and a box layer.
struct HeadWeights {
  std::vector<ConvLayer> cls;
  std::vector<ConvLayer> reg;

  void check(const HeadConfig& cfg) const;
};

HeadWeights random_head_weights(const HeadConfig& cfg, std::mt19937_64& rng);

// Raw box parameters of one voxel. Offsets are fractions of a stride-8 voxel,
// z is the box center height in meters, sizes are log-meters.
struct RegressionOutput {
  double dx = 0.0;
  double dy = 0.0;
  double z = 0.0;
  std::array<double, 3> log_size = {0.0, 0.0, 0.0};
  double sin_yaw = 0.0;
  double cos_yaw = 0.0;
  bool has_velocity = false;
  std::array<double, 2> velocity = {0.0, 0.0};

  std::vector<double> to_vector() const;
  static RegressionOutput from_vector(std::span<const double> v);
};

struct QueryVoxel {
  Coord coord = {0, 0, 0};
  size_t row = 0;  // row in the head's input tensor
  int cls = 0;
  float score = 0.0f;
};

struct PositiveSample {
  size_t gt_index = 0;
  size_t row = 0;
  Coord coord = {0, 0, 0};
  int cls = 0;
  RegressionOutput target;
};

struct TargetAssignment {
  std::vector<PositiveSample> positives;
  // Boxes that found no free voxel of their class.
  std::vector<size_t> unassigned;
  // num_sites x num_classes one-hot map (1 at positives).
  std::vector<float> cls_targets;
  size_t num_sites = 0;
  int num_classes = 0;
};

float sigmoid(float x);

// Pre-sigmoid scores, one channel per class.
SparseTensor classify_logits(const SparseTensor& features, const HeadConfig& cfg,
                             const HeadWeights& w);
// Sigmoid scores in (0, 1), one channel per class, same sites as `features`.
SparseTensor classify_voxels(const SparseTensor& features, const HeadConfig& cfg,
                             const HeadWeights& w);

// Per class: sparse max pooling with the group's kernel, then the score
// threshold; survivors sorted by descending score and capped at
// max_detections.
std::vector<QueryVoxel> select_query_voxels(const SparseTensor& scores,
                                            const HeadConfig& cfg);

// Evaluates the box layer of each selection's group at the selected voxel
// only. Throws kInactiveQuery for a coordinate that is not active.
std::vector<RegressionOutput> regress_boxes(const SparseTensor& features,
                                            std::span<const QueryVoxel> selected,
                                            const HeadConfig& cfg,
                                            const HeadWeights& w);

// Metric box -> regression target relative to voxel `coord` at `stride`.
RegressionOutput encode_box(const Box3D& box, const Coord& coord,
                            const GridConfig& grid, int stride,
                            bool with_velocity);

// Each box's positive voxel is the active voxel nearest to its projected
// center (ties: canonically first). Within a class a voxel serves one box;
// boxes claim voxels in order of increasing distance.
TargetAssignment assign_targets(std::span<const Box3D> boxes,
                                const SparseTensor& features,
                                const GridConfig& grid, const HeadConfig& cfg);

// Mean focal loss over all (site, class) elements:
//   target 1: -alpha * (1 - p)^gamma * log(p)
//   target 0: -(1 - alpha) * p^gamma * log(1 - p)
double focal_loss(std::span<const double> scores, std::span<const float> targets,
                  double gamma = 2.0, double alpha = 0.25);
// Same loss with p = sigmoid(logit), and its gradient w.r.t. the logits.
double focal_loss_logits(std::span<const double> logits,
                         std::span<const float> targets, double gamma = 2.0,
                         double alpha = 0.25);
std::vector<double> focal_loss_logits_grad(std::span<const double> logits,
                                           std::span<const float> targets,
                                           double gamma = 2.0,
                                           double alpha = 0.25);

// Mean absolute error over every regression component.
double l1_regression_loss(std::span<const RegressionOutput> pred,
                          std::span<const RegressionOutput> target);
double l1_loss(std::span<const double> pred, std::span<const double> target);
std::vector<double> l1_loss_grad(std::span<const double> pred,
                                 std::span<const double> target);

// Inverse of encode_box. atan2(0, 0) decodes to yaw 0.
std::vector<Detection> decode_boxes(std::span<const QueryVoxel> selected,
                                    std::span<const RegressionOutput> regressions,
                                    const GridConfig& grid, int stride = 8);

// Metric center of a stride-`stride` voxel's (x, y) cell.
std::array<double, 2> voxel_center(const Coord& coord, const GridConfig& grid,
                                   int stride);

// Head FLOPs: score layers on every site, box layers on selected sites only.
void profile_head(const SparseTensor& features, std::span<const QueryVoxel> selected,
                  const HeadConfig& cfg, const HeadWeights& w, FlopsReport& report);

}  // namespace sparsedet

#endif  // SPARSEDET_HEAD_H_
