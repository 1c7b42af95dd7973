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

#include "sparsedet/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "sparsedet/errors.h"

namespace sparsedet {

namespace {

void check_box(const Box3D& b) {
  for (double s : b.size) {
    if (!(s > 0.0)) fail(ErrorCode::kDegenerateBox, "box size must be positive");
  }
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Intersection of segment p->q with the infinite line through a->b.
Vec2 line_intersection(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) {
  const double dp = cross(a, b, p);
  const double dq = cross(a, b, q);
  const double t = dp / (dp - dq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

}  // namespace

std::array<Vec2, 4> bev_corners(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = box.size[0] / 2.0;
  const double hw = box.size[1] / 2.0;
  const double local[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.center[0] + c * local[i][0] - s * local[i][1],
              box.center[1] + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

double polygon_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return twice / 2.0;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    std::vector<Vec2> input;
    input.swap(out);
    for (size_t i = 0; i < input.size(); ++i) {
      const Vec2& p = input[i];
      const Vec2& q = input[(i + 1) % input.size()];
      const bool p_in = cross(a, b, p) >= 0.0;
      const bool q_in = cross(a, b, q) >= 0.0;
      if (p_in) out.push_back(p);
      if (p_in != q_in) out.push_back(line_intersection(p, q, a, b));
    }
  }
  return out;
}

double intersection_bev(const Box3D& a, const Box3D& b) {
  check_box(a);
  check_box(b);
  const auto pa = bev_corners(a);
  const auto pb = bev_corners(b);
  const auto poly = clip_convex(pa, pb);
  if (poly.size() < 3) return 0.0;
  return std::max(0.0, polygon_area(poly));
}

double iou_bev(const Box3D& a, const Box3D& b) {
  const double inter = intersection_bev(a, b);
  const double uni = a.size[0] * a.size[1] + b.size[0] * b.size[1] - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double inter_area = intersection_bev(a, b);
  const double top = std::min(a.center[2] + a.size[2] / 2, b.center[2] + b.size[2] / 2);
  const double bottom = std::max(a.center[2] - a.size[2] / 2, b.center[2] - b.size[2] / 2);
  const double inter = inter_area * std::max(0.0, top - bottom);
  const double uni = a.size[0] * a.size[1] * a.size[2] +
                     b.size[0] * b.size[1] * b.size[2] - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

EvalReport match_and_score(std::span<const Detection> detections,
                           std::span<const GroundTruthBox> boxes,
                           double iou_threshold) {
  EvalReport report;
  report.iou_threshold = iou_threshold;

  std::set<uint32_t> frames;
  for (const auto& d : detections) {
    frames.insert(d.frame_id);
    ++report.per_class[d.box.cls].num_detections;
  }
  for (const auto& g : boxes) {
    frames.insert(g.frame_id);
    ++report.per_class[g.box.cls].num_gt;
  }

  for (uint32_t frame : frames) {
    std::vector<size_t> dets;
    std::vector<size_t> gts;
    for (size_t i = 0; i < detections.size(); ++i) {
      if (detections[i].frame_id == frame) dets.push_back(i);
    }
    for (size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].frame_id == frame) gts.push_back(i);
    }
    std::stable_sort(dets.begin(), dets.end(), [&](size_t a, size_t b) {
      return detections[a].score > detections[b].score;
    });
    std::vector<bool> taken(gts.size(), false);
    for (size_t d : dets) {
      const Box3D& det = detections[d].box;
      double best = -1.0;
      size_t best_slot = gts.size();
      for (size_t k = 0; k < gts.size(); ++k) {
        if (taken[k] || boxes[gts[k]].box.cls != det.cls) continue;
        const double iou = iou_bev(det, boxes[gts[k]].box);
        if (iou > best) {
          best = iou;
          best_slot = k;
        }
      }
      ClassScore& cs = report.per_class[det.cls];
      if (best_slot < gts.size() && best >= iou_threshold) {
        taken[best_slot] = true;
        ++cs.true_positives;
      } else {
        ++cs.false_positives;
      }
    }
  }

  double sum_p = 0.0;
  double sum_r = 0.0;
  for (auto& [cls, cs] : report.per_class) {
    cs.false_negatives = cs.num_gt - cs.true_positives;
    cs.precision = cs.num_detections == 0
                       ? 1.0
                       : static_cast<double>(cs.true_positives) / cs.num_detections;
    cs.recall = cs.num_gt == 0 ? 1.0
                               : static_cast<double>(cs.true_positives) / cs.num_gt;
    sum_p += cs.precision;
    sum_r += cs.recall;
  }
  if (!report.per_class.empty()) {
    report.mean_precision = sum_p / report.per_class.size();
    report.mean_recall = sum_r / report.per_class.size();
  }
  return report;
}

}  // namespace sparsedet
