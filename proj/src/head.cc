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

#include "sparsedet/head.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsedet/errors.h"
#include "sparsedet/pooling.h"

namespace sparsedet {

namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_sizes(size_t a, size_t b, const char* what) {
  if (a != b) {
    fail(ErrorCode::kShapeMismatch, std::string(what) + ": " + std::to_string(a) +
                                        " vs " + std::to_string(b) + " elements");
  }
}

}  // namespace

int HeadConfig::num_groups() const {
  int groups = 0;
  for (int g : class_group) groups = std::max(groups, g + 1);
  return groups;
}

std::vector<int> HeadConfig::group_classes(int group) const {
  std::vector<int> out;
  for (int c = 0; c < num_classes; ++c) {
    if (class_group[c] == group) out.push_back(c);
  }
  return out;
}

int HeadConfig::class_index(const std::string& name) const {
  for (size_t c = 0; c < class_names.size(); ++c) {
    if (class_names[c] == name) return static_cast<int>(c);
  }
  return -1;
}

std::string HeadConfig::class_name(int cls) const {
  if (cls >= 0 && cls < static_cast<int>(class_names.size())) return class_names[cls];
  return "class" + std::to_string(cls);
}

void HeadConfig::validate() const {
  if (num_classes < 1) fail(ErrorCode::kInvalidArgument, "num_classes must be >= 1");
  if (static_cast<int>(class_names.size()) != num_classes) {
    fail(ErrorCode::kInvalidArgument, "class_names must list num_classes names");
  }
  if (static_cast<int>(class_group.size()) != num_classes) {
    fail(ErrorCode::kInvalidArgument, "class_group must map every class");
  }
  for (int g : class_group) {
    if (g < 0) fail(ErrorCode::kInvalidArgument, "negative class group");
  }
  const int groups = num_groups();
  for (int g = 0; g < groups; ++g) {
    if (group_classes(g).empty()) {
      fail(ErrorCode::kInvalidArgument,
           "class groups must be numbered 0..G-1 without gaps");
    }
  }
  if (static_cast<int>(maxpool_kernel.size()) != groups) {
    fail(ErrorCode::kInvalidArgument, "maxpool_kernel needs one entry per group");
  }
  for (int k : maxpool_kernel) {
    if (k < 1 || k % 2 == 0) fail(ErrorCode::kInvalidArgument, "maxpool kernels must be odd");
  }
  if (head_kernel != 1 && head_kernel != 3) {
    fail(ErrorCode::kInvalidArgument, "head_kernel must be 1 or 3");
  }
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "score_threshold must lie in (0, 1)");
  }
  if (max_detections < 1) fail(ErrorCode::kInvalidArgument, "max_detections must be >= 1");
  if (in_channels < 1) fail(ErrorCode::kInvalidArgument, "head in_channels must be >= 1");
}

void HeadWeights::check(const HeadConfig& cfg) const {
  cfg.validate();
  const size_t groups = static_cast<size_t>(cfg.num_groups());
  if (cls.size() != groups || reg.size() != groups) {
    fail(ErrorCode::kShapeMismatch, "head needs one score and one box layer per group");
  }
  for (size_t g = 0; g < groups; ++g) {
    const int width = static_cast<int>(cfg.group_classes(static_cast<int>(g)).size());
    for (const ConvLayer* layer : {&cls[g], &reg[g]}) {
      layer->validate();
      if (layer->mode != ConvMode::kSubmanifold || layer->dims != 2 ||
          layer->kernel_size != cfg.head_kernel) {
        fail(ErrorCode::kShapeMismatch, "head layers must be 2D submanifold convs");
      }
      if (layer->in_channels != cfg.in_channels) {
        fail(ErrorCode::kChannelMismatch, "head layer input width mismatch");
      }
    }
    if (cls[g].out_channels != width) {
      fail(ErrorCode::kChannelMismatch, "score layer width != group size");
    }
    if (reg[g].out_channels != cfg.regression_width()) {
      fail(ErrorCode::kChannelMismatch, "box layer width mismatch");
    }
  }
}

HeadWeights random_head_weights(const HeadConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  HeadWeights w;
  const int k = cfg.head_kernel;
  const int offsets = k * k;
  std::normal_distribution<float> weight(
      0.0f, static_cast<float>(std::sqrt(1.0 / (offsets * cfg.in_channels))));
  for (int g = 0; g < cfg.num_groups(); ++g) {
    const int width = static_cast<int>(cfg.group_classes(g).size());
    ConvLayer cls = ConvLayer::zeros(ConvMode::kSubmanifold, 2, k, cfg.in_channels, width);
    for (float& v : cls.weights) v = weight(rng);
    // Background prior of 0.1 before any evidence.
    std::fill(cls.bias.begin(), cls.bias.end(), -2.19f);
    ConvLayer reg = ConvLayer::zeros(ConvMode::kSubmanifold, 2, k, cfg.in_channels,
                                     cfg.regression_width());
    for (float& v : reg.weights) v = 0.1f * weight(rng);
    reg.bias[6] = 0.0f;
    reg.bias[7] = 1.0f;  // cos yaw
    reg.bias[3] = 1.4f;  // ~4 m length
    reg.bias[4] = 0.6f;
    reg.bias[5] = 0.4f;
    w.cls.push_back(std::move(cls));
    w.reg.push_back(std::move(reg));
  }
  return w;
}

std::vector<double> RegressionOutput::to_vector() const {
  std::vector<double> v = {dx,          dy,          z,       log_size[0],
                           log_size[1], log_size[2], sin_yaw, cos_yaw};
  if (has_velocity) {
    v.push_back(velocity[0]);
    v.push_back(velocity[1]);
  }
  return v;
}

RegressionOutput RegressionOutput::from_vector(std::span<const double> v) {
  if (v.size() != 8 && v.size() != 10) {
    fail(ErrorCode::kShapeMismatch, "regression vectors have 8 or 10 components");
  }
  RegressionOutput r;
  r.dx = v[0];
  r.dy = v[1];
  r.z = v[2];
  r.log_size = {v[3], v[4], v[5]};
  r.sin_yaw = v[6];
  r.cos_yaw = v[7];
  if (v.size() == 10) {
    r.has_velocity = true;
    r.velocity = {v[8], v[9]};
  }
  return r;
}

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

SparseTensor classify_logits(const SparseTensor& features, const HeadConfig& cfg,
                             const HeadWeights& w) {
  w.check(cfg);
  if (features.dims() != 2) {
    fail(ErrorCode::kInvalidArgument, "head expects a 2D tensor");
  }
  const size_t k = static_cast<size_t>(cfg.num_classes);
  std::vector<float> logits(features.size() * k, 0.0f);
  for (int g = 0; g < cfg.num_groups(); ++g) {
    const std::vector<int> classes = cfg.group_classes(g);
    const SparseTensor out = submanifold_conv(features, w.cls[g]);
    const auto values = out.features();
    for (size_t i = 0; i < features.size(); ++i) {
      for (size_t j = 0; j < classes.size(); ++j) {
        logits[i * k + classes[j]] = values[i * classes.size() + j];
      }
    }
  }
  return features.with_features(std::move(logits), cfg.num_classes);
}

SparseTensor classify_voxels(const SparseTensor& features, const HeadConfig& cfg,
                             const HeadWeights& w) {
  const SparseTensor logits = classify_logits(features, cfg, w);
  std::vector<float> scores(logits.features().begin(), logits.features().end());
  for (float& s : scores) s = sigmoid(s);
  return logits.with_features(std::move(scores), cfg.num_classes);
}

std::vector<QueryVoxel> select_query_voxels(const SparseTensor& scores,
                                            const HeadConfig& cfg) {
  cfg.validate();
  if (scores.channels() != cfg.num_classes) {
    fail(ErrorCode::kChannelMismatch, "score tensor width != num_classes");
  }
  const size_t k = static_cast<size_t>(cfg.num_classes);
  const auto values = scores.features();
  std::vector<QueryVoxel> out;
  for (int c = 0; c < cfg.num_classes; ++c) {
    const int kernel = cfg.maxpool_kernel[cfg.class_group[c]];
    for (size_t row : sparse_max_pool_rows(scores, c, kernel)) {
      const float s = values[row * k + c];
      if (s >= cfg.score_threshold) out.push_back({scores.coord(row), row, c, s});
    }
  }
  std::sort(out.begin(), out.end(), [](const QueryVoxel& a, const QueryVoxel& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.cls != b.cls) return a.cls < b.cls;
    return a.row < b.row;
  });
  if (out.size() > static_cast<size_t>(cfg.max_detections)) {
    out.resize(static_cast<size_t>(cfg.max_detections));
  }
  return out;
}

std::vector<RegressionOutput> regress_boxes(const SparseTensor& features,
                                            std::span<const QueryVoxel> selected,
                                            const HeadConfig& cfg,
                                            const HeadWeights& w) {
  w.check(cfg);
  const int groups = cfg.num_groups();
  std::vector<std::vector<size_t>> rows(groups);
  std::vector<std::vector<size_t>> slots(groups);
  for (size_t i = 0; i < selected.size(); ++i) {
    const auto row = features.find(selected[i].coord);
    if (!row) {
      fail(ErrorCode::kInactiveQuery,
           "query voxel " + to_string(selected[i].coord) + " is not active");
    }
    if (selected[i].cls < 0 || selected[i].cls >= cfg.num_classes) {
      fail(ErrorCode::kInvalidArgument, "query class out of range");
    }
    const int g = cfg.class_group[selected[i].cls];
    rows[g].push_back(*row);
    slots[g].push_back(i);
  }
  const size_t width = static_cast<size_t>(cfg.regression_width());
  std::vector<RegressionOutput> out(selected.size());
  for (int g = 0; g < groups; ++g) {
    if (rows[g].empty()) continue;
    const std::vector<float> raw = submanifold_conv_at(features, w.reg[g], rows[g]);
    for (size_t j = 0; j < rows[g].size(); ++j) {
      std::vector<double> v(raw.begin() + j * width, raw.begin() + (j + 1) * width);
      out[slots[g][j]] = RegressionOutput::from_vector(v);
    }
  }
  return out;
}

std::array<double, 2> voxel_center(const Coord& coord, const GridConfig& grid,
                                   int stride) {
  return {(coord[0] + 0.5) * stride * grid.voxel_size[0] + grid.range_min[0],
          (coord[1] + 0.5) * stride * grid.voxel_size[1] + grid.range_min[1]};
}

RegressionOutput encode_box(const Box3D& box, const Coord& coord,
                            const GridConfig& grid, int stride,
                            bool with_velocity) {
  RegressionOutput r;
  r.dx = (box.center[0] - grid.range_min[0]) / (stride * grid.voxel_size[0]) -
         (coord[0] + 0.5);
  r.dy = (box.center[1] - grid.range_min[1]) / (stride * grid.voxel_size[1]) -
         (coord[1] + 0.5);
  r.z = box.center[2];
  for (int a = 0; a < 3; ++a) r.log_size[a] = std::log(box.size[a]);
  r.sin_yaw = std::sin(box.yaw);
  r.cos_yaw = std::cos(box.yaw);
  r.has_velocity = with_velocity;
  if (with_velocity) r.velocity = box.velocity;
  return r;
}

TargetAssignment assign_targets(std::span<const Box3D> boxes,
                                const SparseTensor& features,
                                const GridConfig& grid, const HeadConfig& cfg) {
  cfg.validate();
  if (features.empty()) {
    fail(ErrorCode::kNoActiveVoxels, "cannot assign targets in an empty frame");
  }
  const int stride = features.stride();
  const size_t n = features.size();
  const size_t k = static_cast<size_t>(cfg.num_classes);

  auto dist2 = [&](const Box3D& b, size_t row) {
    const Coord& c = features.coord(row);
    const double u = (b.center[0] - grid.range_min[0]) / (stride * grid.voxel_size[0]);
    const double v = (b.center[1] - grid.range_min[1]) / (stride * grid.voxel_size[1]);
    const double du = u - (c[0] + 0.5);
    const double dv = v - (c[1] + 0.5);
    return du * du + dv * dv;
  };

  std::vector<double> nearest(boxes.size(), std::numeric_limits<double>::infinity());
  for (size_t b = 0; b < boxes.size(); ++b) {
    if (boxes[b].cls < 0 || boxes[b].cls >= cfg.num_classes) {
      fail(ErrorCode::kInvalidArgument, "box class out of range");
    }
    for (size_t r = 0; r < n; ++r) nearest[b] = std::min(nearest[b], dist2(boxes[b], r));
  }
  std::vector<size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return nearest[a] < nearest[b]; });

  TargetAssignment out;
  out.num_sites = n;
  out.num_classes = cfg.num_classes;
  out.cls_targets.assign(n * k, 0.0f);
  for (size_t b : order) {
    const Box3D& box = boxes[b];
    size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t r = 0; r < n; ++r) {
      if (out.cls_targets[r * k + box.cls] != 0.0f) continue;  // claimed
      const double d = dist2(box, r);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    if (best == n) {
      out.unassigned.push_back(b);
      continue;
    }
    out.cls_targets[best * k + box.cls] = 1.0f;
    out.positives.push_back({b, best, features.coord(best), box.cls,
                             encode_box(box, features.coord(best), grid, stride,
                                        cfg.regress_velocity)});
  }
  std::sort(out.positives.begin(), out.positives.end(),
            [](const PositiveSample& a, const PositiveSample& b) {
              return a.gt_index < b.gt_index;
            });
  std::sort(out.unassigned.begin(), out.unassigned.end());
  return out;
}

double focal_loss(std::span<const double> scores, std::span<const float> targets,
                  double gamma, double alpha) {
  check_sizes(scores.size(), targets.size(), "focal_loss");
  if (scores.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double p = clamp_prob(scores[i]);
    if (targets[i] > 0.5f) {
      sum += -alpha * std::pow(1.0 - p, gamma) * std::log(p);
    } else {
      sum += -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
    }
  }
  return sum / static_cast<double>(scores.size());
}

double focal_loss_logits(std::span<const double> logits,
                         std::span<const float> targets, double gamma,
                         double alpha) {
  std::vector<double> p(logits.size());
  std::transform(logits.begin(), logits.end(), p.begin(), sigmoid_d);
  return focal_loss(p, targets, gamma, alpha);
}

std::vector<double> focal_loss_logits_grad(std::span<const double> logits,
                                           std::span<const float> targets,
                                           double gamma, double alpha) {
  check_sizes(logits.size(), targets.size(), "focal_loss");
  std::vector<double> grad(logits.size(), 0.0);
  const double scale = logits.empty() ? 0.0 : 1.0 / static_cast<double>(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    const double p = clamp_prob(sigmoid_d(logits[i]));
    const double q = 1.0 - p;
    // dp/dx = p * q folded into both branches.
    if (targets[i] > 0.5f) {
      grad[i] = alpha * std::pow(q, gamma) * (gamma * p * std::log(p) - q);
    } else {
      grad[i] = -(1.0 - alpha) * std::pow(p, gamma) * (gamma * q * std::log(q) - p);
    }
    grad[i] *= scale;
  }
  return grad;
}

double l1_loss(std::span<const double> pred, std::span<const double> target) {
  check_sizes(pred.size(), target.size(), "l1_loss");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) sum += std::fabs(pred[i] - target[i]);
  return sum / static_cast<double>(pred.size());
}

std::vector<double> l1_loss_grad(std::span<const double> pred,
                                 std::span<const double> target) {
  check_sizes(pred.size(), target.size(), "l1_loss");
  std::vector<double> grad(pred.size(), 0.0);
  const double scale = pred.empty() ? 0.0 : 1.0 / static_cast<double>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    grad[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
  }
  return grad;
}

double l1_regression_loss(std::span<const RegressionOutput> pred,
                          std::span<const RegressionOutput> target) {
  check_sizes(pred.size(), target.size(), "l1_regression_loss");
  std::vector<double> p, t;
  for (size_t i = 0; i < pred.size(); ++i) {
    const auto a = pred[i].to_vector();
    const auto b = target[i].to_vector();
    check_sizes(a.size(), b.size(), "l1_regression_loss components");
    p.insert(p.end(), a.begin(), a.end());
    t.insert(t.end(), b.begin(), b.end());
  }
  return l1_loss(p, t);
}

std::vector<Detection> decode_boxes(std::span<const QueryVoxel> selected,
                                    std::span<const RegressionOutput> regressions,
                                    const GridConfig& grid, int stride) {
  check_sizes(selected.size(), regressions.size(), "decode_boxes");
  std::vector<Detection> out;
  out.reserve(selected.size());
  for (size_t i = 0; i < selected.size(); ++i) {
    const QueryVoxel& q = selected[i];
    const RegressionOutput& r = regressions[i];
    Detection d;
    d.box.cls = q.cls;
    d.box.center = {(q.coord[0] + 0.5 + r.dx) * stride * grid.voxel_size[0] + grid.range_min[0],
                    (q.coord[1] + 0.5 + r.dy) * stride * grid.voxel_size[1] + grid.range_min[1],
                    r.z};
    for (int a = 0; a < 3; ++a) d.box.size[a] = std::exp(r.log_size[a]);
    d.box.yaw = (r.sin_yaw == 0.0 && r.cos_yaw == 0.0) ? 0.0
                                                        : std::atan2(r.sin_yaw, r.cos_yaw);
    if (r.has_velocity) d.box.velocity = r.velocity;
    d.has_velocity = r.has_velocity;
    d.score = q.score;
    d.query_voxel = q.coord;
    d.query_position = voxel_center(q.coord, grid, stride);
    out.push_back(d);
  }
  return out;
}

void profile_head(const SparseTensor& features, std::span<const QueryVoxel> selected,
                  const HeadConfig& cfg, const HeadWeights& w, FlopsReport& report) {
  w.check(cfg);
  std::vector<std::vector<size_t>> rows(cfg.num_groups());
  for (const QueryVoxel& q : selected) {
    if (auto r = features.find(q.coord)) rows[cfg.class_group[q.cls]].push_back(*r);
  }
  for (int g = 0; g < cfg.num_groups(); ++g) {
    const std::string prefix = "head.group" + std::to_string(g);
    report.add(count_flops(features, w.cls[g], features, prefix + ".cls",
                           FlopsGroup::kHead));
    report.add(count_flops_at(features, w.reg[g], rows[g], prefix + ".reg",
                              FlopsGroup::kHead));
  }
}

}  // namespace sparsedet
