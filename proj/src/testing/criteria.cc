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

#include "testing/criteria.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "sparsedet/backbone.h"
#include "sparsedet/conv.h"
#include "sparsedet/errors.h"
#include "sparsedet/flops.h"
#include "sparsedet/head.h"
#include "sparsedet/parallel.h"
#include "sparsedet/pooling.h"
#include "sparsedet/scene.h"
#include "sparsedet/tracker.h"
#include "sparsedet/voxelizer.h"
#include "testing/oracles.h"

namespace sparsedet::testing {

namespace {

using Clock = std::chrono::steady_clock;

// Collects failed expectations; keeps the first few messages.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (messages_.size() < 3) messages_.push_back(what);
  }

  bool ok() const { return failures_ == 0; }

  std::string report(const std::string& success) const {
    if (ok()) return success;
    std::string out = std::to_string(failures_) + "/" + std::to_string(checks_) +
                      " checks failed";
    for (const auto& m : messages_) out += "; " + m;
    return out;
  }

 private:
  size_t checks_ = 0;
  size_t failures_ = 0;
  std::vector<std::string> messages_;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_abs_diff(std::span<const float> got, const std::vector<double>& want) {
  if (got.size() != want.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(got[i]) - want[i]));
  }
  return worst;
}

bool same_coords(std::span<const Coord> a, std::span<const Coord> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

bool bit_identical(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Multiples of 1/8 in [-8, 8]: sums of a few hundred stay exact in float.
SparseTensor dyadic(const SparseTensor& t, std::mt19937_64& rng) {
  std::vector<float> f(t.features().size());
  for (float& v : f) v = static_cast<float>(uniform_int(rng, -64, 64)) / 8.0f;
  return t.with_features(std::move(f), t.channels());
}

// A small fixed street scene used for the pruning sweeps.
SparseTensor pruning_scene() {
  SceneSpec spec;
  spec.seed = 11;
  spec.surface_density = 40.0;
  spec.ground = true;
  spec.ground_z = -1.9;
  spec.ground_half_size = 12.0;
  spec.ground_density = 2.0;
  const struct {
    int cls;
    double x, y, l, w, h, yaw;
  } objects[] = {{0, 6.0, 2.0, 4.5, 1.9, 1.6, 0.3},   {0, -8.0, -5.0, 4.2, 1.8, 1.5, 1.2},
                 {1, 3.0, -9.0, 7.0, 2.5, 3.0, -0.4}, {8, -2.0, 4.0, 0.7, 0.7, 1.8, 0.0},
                 {5, 9.0, 8.0, 2.0, 0.5, 1.0, 0.8}};
  int64_t id = 1;
  for (const auto& o : objects) {
    SceneObject obj;
    obj.id = id++;
    obj.box.cls = o.cls;
    obj.box.center = {o.x, o.y, -1.9 + o.h / 2.0};
    obj.box.size = {o.l, o.w, o.h};
    obj.box.yaw = o.yaw;
    spec.objects.push_back(obj);
  }
  return voxelize(generate_scene(spec).front().cloud, GridConfig{}).tensor;
}

Detection detection_from_box(const Box3D& box, uint32_t frame, const GridConfig& grid) {
  Detection d;
  d.box = box;
  d.score = 0.9;
  d.frame_id = frame;
  d.query_voxel = {
      static_cast<int32_t>(std::floor((box.center[0] - grid.range_min[0]) / (8 * grid.voxel_size[0]))),
      static_cast<int32_t>(std::floor((box.center[1] - grid.range_min[1]) / (8 * grid.voxel_size[1]))),
      0};
  d.query_position = voxel_center(d.query_voxel, grid, 8);
  return d;
}

// ---- 1 -------------------------------------------------------------------
CriterionResult dense_equivalence(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  const auto start = Clock::now();
  double worst_sub = 0.0;
  double worst_strided = 0.0;
  constexpr int kTrials = 200;
  for (int trial = 0; trial < kTrials; ++trial) {
    const Coord extent = {uniform_int(rng, 4, 16), uniform_int(rng, 4, 16),
                          uniform_int(rng, 4, 16)};
    const size_t n = static_cast<size_t>(uniform_int(rng, 1, 500));
    const int cin = uniform_int(rng, 1, 4);
    const int cout = uniform_int(rng, 1, 4);
    const SparseTensor t = random_tensor(rng, 3, extent, n, cin);
    const std::string tag = "trial " + std::to_string(trial);

    // Fan-in scaled bound, as used for network layers: sqrt(6 / (27 * cin)).
    const float bound = static_cast<float>(std::sqrt(6.0 / (27.0 * cin)));
    const ConvLayer sub = random_layer(rng, ConvMode::kSubmanifold, 3, 3, cin, cout, bound);
    const SparseTensor y = submanifold_conv(t, sub);
    check.expect(same_coords(y.coords(), t.coords()), tag + ": submanifold sites changed");
    const double e1 = max_abs_diff(y.features(), oracle_submanifold(t, sub));
    worst_sub = std::max(worst_sub, e1);
    check.expect(e1 <= 1e-5, tag + ": submanifold error " + fmt(e1));

    const ConvLayer str = random_layer(rng, ConvMode::kStrided, 3, 3, cin, cout, bound);
    const SparseTensor d = strided_conv_downsample(t, str);
    const std::vector<Coord> sites = oracle_strided_sites(t, 3);
    check.expect(same_coords(d.coords(), sites), tag + ": strided sites differ");
    check.expect(d.stride() == 2, tag + ": stride not doubled");
    const double e2 = max_abs_diff(d.features(), oracle_strided(t, str, sites));
    worst_strided = std::max(worst_strided, e2);
    check.expect(e2 <= 1e-5, tag + ": strided error " + fmt(e2));
  }
  const double elapsed = seconds_since(start);
  check.expect(elapsed < 120.0, "runtime " + fmt(elapsed) + " s exceeds 120 s");
  return {1, "dense-oracle equivalence", check.ok(),
          check.report(std::to_string(kTrials) + " trials, max |err| submanifold " +
                       fmt(worst_sub) + ", strided " + fmt(worst_strided) + " (tol 1e-5)"),
          elapsed};
}

// ---- 2 -------------------------------------------------------------------
CriterionResult closure_determinism(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  const int saved_threads = worker_threads();
  constexpr int kTensors = 100;
  for (int trial = 0; trial < kTensors; ++trial) {
    const int dims = trial % 4 == 3 ? 2 : 3;
    const Coord extent = {uniform_int(rng, 2, 40), uniform_int(rng, 2, 40),
                          uniform_int(rng, 2, 40)};
    const int cin = uniform_int(rng, 1, 8);
    const int cout = uniform_int(rng, 1, 8);
    const int k = trial % 5 == 0 ? 5 : 3;
    const SparseTensor t =
        random_tensor(rng, dims, extent, static_cast<size_t>(uniform_int(rng, 0, 2000)), cin);
    const ConvLayer layer = random_layer(rng, ConvMode::kSubmanifold, dims, k, cin, cout);
    const std::string tag = "tensor " + std::to_string(trial);

    set_worker_threads(1);
    const SparseTensor a = submanifold_conv(t, layer);
    const SparseTensor b = submanifold_conv(t, layer);
    set_worker_threads(4);
    const SparseTensor c = submanifold_conv(t, layer);
    check.expect(same_coords(a.coords(), t.coords()), tag + ": output sites != input sites");
    check.expect(bit_identical(a.features(), b.features()), tag + ": repeated run differs");
    check.expect(bit_identical(a.features(), c.features()), tag + ": 1 vs 4 threads differ");
  }
  set_worker_threads(saved_threads);
  return {2, "submanifold closure and determinism", check.ok(),
          check.report(std::to_string(kTensors) +
                       " tensors: site sets preserved, repeated and 1/4-thread runs "
                       "bit-identical"),
          0.0};
}

// ---- 3 -------------------------------------------------------------------
CriterionResult pruning(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  const int tenths[] = {0, 1, 3, 5, 7, 9};

  std::vector<size_t> sizes;
  for (size_t n = 0; n <= 40; ++n) sizes.push_back(n);
  for (size_t n : {57u, 101u, 333u, 1000u}) sizes.push_back(n);
  for (size_t n : sizes) {
    const SparseTensor t = random_tensor(rng, 3, {16, 16, 16}, n, 4);
    for (int m : tenths) {
      const auto got = select_dilation_set(t, m / 10.0);
      const size_t want = ((10 - static_cast<size_t>(m)) * n + 9) / 10;
      check.expect(got.size() == want, "N=" + std::to_string(n) + " r=0." + std::to_string(m) +
                                           ": |D|=" + std::to_string(got.size()) +
                                           ", want " + std::to_string(want));
      check.expect(same_coords(got, oracle_dilation_set(t, m)),
                   "N=" + std::to_string(n) + " r=0." + std::to_string(m) +
                       ": set differs from ranking oracle");
    }
  }

  // One strided layer on a fixed input.
  {
    const SparseTensor t = random_tensor(rng, 3, {16, 16, 16}, 400, 4);
    ConvLayer layer = random_layer(rng, ConvMode::kStrided, 3, 3, 4, 8);
    uint64_t previous = std::numeric_limits<uint64_t>::max();
    for (int m : tenths) {
      layer.prune_ratio = m / 10.0;
      const uint64_t flops = count_flops(t, layer, strided_conv_downsample(t, layer)).flops;
      check.expect(flops <= previous, "single layer FLOPs rose at r=0." + std::to_string(m));
      previous = flops;
    }
  }

  const SparseTensor scene = pruning_scene();
  BackboneConfig cfg;
  std::mt19937_64 wrng(seed + 1);
  const BackboneWeights w = random_backbone_weights(cfg, wrng);
  std::string sweep = "ratio sweep G:";
  uint64_t previous = std::numeric_limits<uint64_t>::max();
  for (int m : tenths) {
    cfg.prune_ratio = m / 10.0;
    const uint64_t total = profile_backbone(scene, w, cfg).total(FlopsGroup::kBackbone);
    sweep += " " + fmt(static_cast<double>(total) / 1e9);
    check.expect(total <= previous, "backbone FLOPs rose at r=0." + std::to_string(m));
    previous = total;
  }
  cfg.prune_ratio = 0.5;
  std::string stages = "; stage sweep G:";
  previous = std::numeric_limits<uint64_t>::max();
  const std::vector<std::vector<int>> stage_sets = {{}, {1}, {1, 2}, {1, 2, 3}};
  for (const auto& set : stage_sets) {
    cfg.prune_stages = set;
    const uint64_t total = profile_backbone(scene, w, cfg).total(FlopsGroup::kBackbone);
    stages += " " + fmt(static_cast<double>(total) / 1e9);
    check.expect(total <= previous,
                 "backbone FLOPs rose at prune_stages size " + std::to_string(set.size()));
    previous = total;
  }
  return {3, "pruning cardinality and FLOPs trends", check.ok(),
          check.report("|D| == ceil((1-r)N) on " + std::to_string(sizes.size() * 6) +
                       " cases; scene of " + std::to_string(scene.size()) + " voxels, " +
                       sweep + stages),
          0.0};
}

// ---- 4 -------------------------------------------------------------------
CriterionResult height_compression(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  constexpr int kTensors = 100;
  for (int trial = 0; trial < kTensors; ++trial) {
    const Coord extent = {uniform_int(rng, 1, 16), uniform_int(rng, 1, 16),
                          uniform_int(rng, 1, 16)};
    const int c = uniform_int(rng, 1, 6);
    const SparseTensor t = dyadic(
        random_tensor(rng, 3, extent, static_cast<size_t>(uniform_int(rng, 0, 600)), c), rng);
    const SparseTensor h = height_compress(t);
    const std::string tag = "tensor " + std::to_string(trial);
    check.expect(h.dims() == 2 && h.channels() == c && h.stride() == t.stride(),
                 tag + ": wrong output geometry");

    const auto columns = oracle_height_compress(t);
    bool match = columns.size() == h.size();
    for (size_t i = 0; match && i < columns.size(); ++i) {
      match = h.coord(i)[0] == columns[i].x && h.coord(i)[1] == columns[i].y;
      for (int ch = 0; match && ch < c; ++ch) {
        match = static_cast<double>(h.row(i)[ch]) == columns[i].features[ch];
      }
    }
    check.expect(match, tag + ": differs from dense z-sum");

    for (int ch = 0; ch < c; ++ch) {
      double in = 0.0;
      double out = 0.0;
      for (size_t i = 0; i < t.size(); ++i) in += t.row(i)[ch];
      for (size_t i = 0; i < h.size(); ++i) out += h.row(i)[ch];
      check.expect(in == out, tag + ": channel " + std::to_string(ch) + " mass " + fmt(in) +
                                  " -> " + fmt(out));
    }
  }
  return {4, "height compression", check.ok(),
          check.report(std::to_string(kTensors) +
                       " tensors: exact per-channel mass, exact match with dense z-sum"),
          0.0};
}

// ---- 5 -------------------------------------------------------------------
CriterionResult union_algebra(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;

  // Rescaling on every site of several grids.
  size_t enumerated = 0;
  for (const Coord e4 : {Coord{5, 6, 4}, Coord{8, 7, 3}, Coord{9, 9, 5}, Coord{12, 4, 2}}) {
    const Coord e5 = halve_extent(e4, 3);
    const Coord e6 = halve_extent(e5, 3);
    for (const auto& [factor, extent, stride] :
         {std::tuple{2, e5, 16}, std::tuple{4, e6, 32}}) {
      std::vector<Coord> all;
      for (int z = 0; z < extent[2]; ++z) {
        for (int y = 0; y < extent[1]; ++y) {
          for (int x = 0; x < extent[0]; ++x) all.push_back({x, y, z});
        }
      }
      const SparseTensor t = SparseTensor::build(
          3, all, std::vector<float>(all.size(), 1.0f), 1, stride, extent);
      const SparseTensor r = rescale_coords(t, factor, 8, e4);
      for (size_t i = 0; i < t.size(); ++i) {
        const Coord& c = t.coord(i);
        check.expect(r.coord(i) == Coord{c[0] * factor, c[1] * factor, c[2] * factor},
                     "x" + std::to_string(factor) + " of " + to_string(c));
      }
      enumerated += t.size();
    }
  }
  {
    const Coord c = {3, 2, 1};
    const SparseTensor t6 = SparseTensor::build(3, {c}, {1.0f}, 1, 32, {4, 4, 4});
    const SparseTensor t5 = SparseTensor::build(3, {c}, {1.0f}, 1, 16, {8, 8, 8});
    check.expect(rescale_coords(t6, 4, 8, {16, 16, 16}).coord(0) == Coord{12, 8, 4},
                 "F6 (3,2,1) must map to (12,8,4)");
    check.expect(rescale_coords(t5, 2, 8, {16, 16, 16}).coord(0) == Coord{6, 4, 2},
                 "F5 (3,2,1) must map to (6,4,2)");
  }

  // Coincident sites sum their contributors.
  for (int trial = 0; trial < 20; ++trial) {
    const Coord e4 = {uniform_int(rng, 4, 12), uniform_int(rng, 4, 12), uniform_int(rng, 2, 6)};
    const Coord e5 = halve_extent(e4, 3);
    const Coord e6 = halve_extent(e5, 3);
    const int c = uniform_int(rng, 1, 4);
    const SparseTensor f4 = dyadic(random_tensor(rng, 3, e4, 60, c, 8), rng);
    const SparseTensor f5 = dyadic(random_tensor(rng, 3, e5, 20, c, 16), rng);
    const SparseTensor f6 = dyadic(random_tensor(rng, 3, e6, 6, c, 32), rng);
    std::map<std::tuple<int, int, int>, std::vector<double>> want;
    for (const auto& [t, factor] : {std::pair{&f4, 1}, std::pair{&f5, 2}, std::pair{&f6, 4}}) {
      for (size_t i = 0; i < t->size(); ++i) {
        const Coord& p = t->coord(i);
        auto& acc = want[{p[2] * factor, p[1] * factor, p[0] * factor}];
        acc.resize(static_cast<size_t>(c), 0.0);
        for (int ch = 0; ch < c; ++ch) acc[static_cast<size_t>(ch)] += t->row(i)[ch];
      }
    }
    const SparseTensor merged = merge_multistride(f4, f5, f6);
    bool match = merged.size() == want.size();
    size_t i = 0;
    for (auto it = want.begin(); match && it != want.end(); ++it, ++i) {
      const auto& [z, y, x] = it->first;
      match = merged.coord(i) == Coord{x, y, z};
      for (int ch = 0; match && ch < c; ++ch) {
        match = static_cast<double>(merged.row(i)[ch]) == it->second[static_cast<size_t>(ch)];
      }
    }
    check.expect(match, "merge trial " + std::to_string(trial) + ": sum of contributors differs");
  }

  // Output sites of the whole backbone trace back to F4, F5 or F6.
  BackboneConfig cfg;
  cfg.channels = {4, 4, 6, 6, 6, 6};
  size_t traced = 0;
  for (int trial = 0; trial < 12; ++trial) {
    std::mt19937_64 wrng(seed + static_cast<uint64_t>(trial));
    const BackboneWeights w = random_backbone_weights(cfg, wrng);
    const SparseTensor input = random_tensor(
        rng, 3, {uniform_int(rng, 8, 64), uniform_int(rng, 8, 64), uniform_int(rng, 4, 24)},
        static_cast<size_t>(uniform_int(rng, 1, 300)), kVoxelChannels);
    const StageOutputs stages = run_stages(input, w, cfg);
    std::set<std::pair<int, int>> sources;  // (y, x)
    for (const auto& [s, factor] : {std::pair{3, 1}, std::pair{4, 2}, std::pair{5, 4}}) {
      for (const Coord& p : stages.features[static_cast<size_t>(s)].coords()) {
        sources.insert({p[1] * factor, p[0] * factor});
      }
    }
    const SparseTensor out = forward_backbone(input, w, cfg);
    std::set<std::pair<int, int>> got;
    for (const Coord& p : out.coords()) got.insert({p[1], p[0]});
    check.expect(out.dims() == 2 && out.stride() == 8, "backbone output not 2D stride 8");
    check.expect(got == sources, "trial " + std::to_string(trial) + ": untraceable output site");
    traced += out.size();
  }
  return {5, "multi-stride union algebra", check.ok(),
          check.report(std::to_string(enumerated) + " enumerated rescalings exact; 20 merges "
                       "sum exactly; " + std::to_string(traced) +
                       " backbone output sites traced to F4/F5/F6"),
          0.0};
}

// ---- 6 -------------------------------------------------------------------
CriterionResult max_pool_selection(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  constexpr int kFields = 100;
  size_t selected_total = 0;
  for (int trial = 0; trial < kFields; ++trial) {
    HeadConfig cfg;
    cfg.num_classes = 3;
    cfg.class_names = {"a", "b", "c"};
    const bool shared = trial % 3 == 2;
    cfg.class_group = shared ? std::vector<int>{0, 0, 1} : std::vector<int>{0, 1, 2};
    cfg.maxpool_kernel.clear();
    for (int g = 0; g < cfg.num_groups(); ++g) cfg.maxpool_kernel.push_back(2 * uniform_int(rng, 0, 3) + 1);
    cfg.score_threshold = uniform_real(rng, 0.05, 0.6);
    cfg.max_detections = trial % 4 == 0 ? uniform_int(rng, 1, 10) : 500;

    SparseTensor field = random_tensor(rng, 2, {32, 32, 1},
                                       static_cast<size_t>(uniform_int(rng, 1, 300)), 3, 8);
    std::vector<float> scores(field.features().size());
    const bool ties = trial % 2 == 1;
    for (float& s : scores) {
      s = ties ? static_cast<float>(uniform_int(rng, 1, 19)) / 20.0f
               : static_cast<float>(uniform_real(rng, 0.001, 0.999));
    }
    field = field.with_features(std::move(scores), 3);

    const auto got = select_query_voxels(field, cfg);
    const auto want = oracle_select(field, cfg);
    bool match = got.size() == want.size();
    for (size_t i = 0; match && i < got.size(); ++i) {
      match = got[i].coord == want[i].coord && got[i].cls == want[i].cls &&
              got[i].score == want[i].score;
    }
    check.expect(match, "field " + std::to_string(trial) + ": selection differs from oracle");
    selected_total += got.size();

    // Same-group pairs must sit farther apart than the pooling radius.
    for (size_t a = 0; a < got.size(); ++a) {
      for (size_t b = a + 1; b < got.size(); ++b) {
        if (got[a].cls != got[b].cls) continue;
        const int r = cfg.maxpool_kernel[static_cast<size_t>(cfg.class_group[static_cast<size_t>(got[a].cls)])] / 2;
        const int cheb = std::max(std::abs(got[a].coord[0] - got[b].coord[0]),
                                  std::abs(got[a].coord[1] - got[b].coord[1]));
        check.expect(cheb > r, "field " + std::to_string(trial) + ": duplicate within radius");
      }
    }
  }
  return {6, "max-pool selection without NMS", check.ok(),
          check.report(std::to_string(kFields) + " score fields, " +
                       std::to_string(selected_total) +
                       " selections equal the local-argmax oracle; no same-class pair "
                       "within the pooling radius"),
          0.0};
}

// ---- 7 -------------------------------------------------------------------
CriterionResult encode_decode(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  const GridConfig grid;
  HeadConfig cfg;
  cfg.in_channels = 1;
  const Coord extent = halve_extent(halve_extent(halve_extent(grid.extent(), 3), 3), 3);
  const SparseTensor sites =
      random_tensor(rng, 2, {extent[0], extent[1], 1}, 3000, 1, 8);

  constexpr int kBoxes = 500;
  std::vector<Box3D> boxes;
  for (int i = 0; i < kBoxes; ++i) {
    Box3D b;
    b.cls = uniform_int(rng, 0, cfg.num_classes - 1);
    b.center = {uniform_real(rng, -53.9, 53.9), uniform_real(rng, -53.9, 53.9),
                uniform_real(rng, -4.0, 2.0)};
    b.size = {uniform_real(rng, 0.2, 15.0), uniform_real(rng, 0.2, 4.0),
              uniform_real(rng, 0.3, 4.5)};
    b.yaw = uniform_real(rng, -3.0 * std::numbers::pi, 3.0 * std::numbers::pi);
    b.velocity = {uniform_real(rng, -20.0, 20.0), uniform_real(rng, -20.0, 20.0)};
    boxes.push_back(b);
  }
  const TargetAssignment ta = assign_targets(boxes, sites, grid, cfg);
  check.expect(ta.unassigned.empty() && ta.positives.size() == boxes.size(),
               std::to_string(ta.unassigned.size()) + " boxes left unassigned");

  std::vector<QueryVoxel> queries;
  std::vector<RegressionOutput> regressions;
  for (const PositiveSample& p : ta.positives) {
    queries.push_back({p.coord, p.row, p.cls, 1.0f});
    regressions.push_back(p.target);
  }
  const auto decoded = decode_boxes(queries, regressions, grid, 8);
  double worst_pos = 0.0;
  double worst_yaw = 0.0;
  for (size_t i = 0; i < decoded.size(); ++i) {
    const Box3D& want = boxes[ta.positives[i].gt_index];
    const Box3D& got = decoded[i].box;
    for (int a = 0; a < 3; ++a) {
      worst_pos = std::max({worst_pos, std::fabs(got.center[a] - want.center[a]),
                            std::fabs(got.size[a] - want.size[a])});
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double dyaw = std::fmod(std::fabs(got.yaw - want.yaw), two_pi);
    dyaw = std::min(dyaw, two_pi - dyaw);
    worst_yaw = std::max(worst_yaw, dyaw);
    check.expect(got.cls == want.cls, "class changed in round trip");
    check.expect(std::fabs(got.velocity[0] - want.velocity[0]) <= 1e-5 &&
                     std::fabs(got.velocity[1] - want.velocity[1]) <= 1e-5,
                 "velocity changed in round trip");
  }
  check.expect(worst_pos <= 1e-5, "center/size error " + fmt(worst_pos) + " m");
  check.expect(worst_yaw <= 1e-5, "yaw error " + fmt(worst_yaw) + " rad");
  return {7, "encode/decode round trip", check.ok(),
          check.report(std::to_string(kBoxes) + " boxes, max center/size error " +
                       fmt(worst_pos) + " m, max yaw error " + fmt(worst_yaw) +
                       " rad (tol 1e-5)"),
          0.0};
}

// ---- 8 -------------------------------------------------------------------
CriterionResult loss_oracles(uint64_t seed) {
  std::mt19937_64 rng(seed);
  Check check;
  double worst_value = 0.0;
  double worst_grad = 0.0;
  constexpr int kInstances = 20;
  auto relative = [](double a, double b) {
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
  };
  for (int trial = 0; trial < kInstances; ++trial) {
    const size_t n = static_cast<size_t>(uniform_int(rng, 5, 60));
    std::vector<double> logits(n);
    std::vector<double> scores(n);
    std::vector<float> targets(n);
    for (size_t i = 0; i < n; ++i) {
      logits[i] = uniform_real(rng, -4.0, 4.0);
      scores[i] = 1.0 / (1.0 + std::exp(-logits[i]));
      targets[i] = uniform_real(rng, 0.0, 1.0) < 0.25 ? 1.0f : 0.0f;
    }
    const double focal = focal_loss(scores, targets, 2.0, 0.25);
    const double focal_err = std::fabs(focal - oracle_focal(scores, targets, 2.0, 0.25));
    worst_value = std::max(worst_value, focal_err);
    check.expect(focal_err <= 1e-6, "focal loss error " + fmt(focal_err));

    const auto grad = focal_loss_logits_grad(logits, targets, 2.0, 0.25);
    constexpr double h = 1e-4;
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> up = logits;
      std::vector<double> down = logits;
      up[i] += h;
      down[i] -= h;
      const double fd = (focal_loss_logits(up, targets, 2.0, 0.25) -
                         focal_loss_logits(down, targets, 2.0, 0.25)) /
                        (2.0 * h);
      const double rel = relative(grad[i], fd);
      worst_grad = std::max(worst_grad, rel);
      check.expect(rel <= 1e-4, "focal gradient relative error " + fmt(rel));
    }

    const size_t m = static_cast<size_t>(uniform_int(rng, 1, 10));
    const bool velocity = trial % 2 == 0;
    std::vector<RegressionOutput> pred(m);
    std::vector<RegressionOutput> target(m);
    for (size_t i = 0; i < m; ++i) {
      std::vector<double> a(velocity ? 10 : 8);
      std::vector<double> b(a.size());
      for (size_t j = 0; j < a.size(); ++j) {
        a[j] = uniform_real(rng, -3.0, 3.0);
        // Keep every residual away from the kink at zero.
        const double gap = uniform_real(rng, 0.01, 2.0);
        b[j] = a[j] + (uniform_int(rng, 0, 1) ? gap : -gap);
      }
      pred[i] = RegressionOutput::from_vector(a);
      target[i] = RegressionOutput::from_vector(b);
    }
    const double l1 = l1_regression_loss(pred, target);
    const double l1_err = std::fabs(l1 - oracle_l1(pred, target));
    worst_value = std::max(worst_value, l1_err);
    check.expect(l1_err <= 1e-6, "L1 loss error " + fmt(l1_err));

    std::vector<double> flat_p;
    std::vector<double> flat_t;
    for (size_t i = 0; i < m; ++i) {
      const auto a = pred[i].to_vector();
      const auto b = target[i].to_vector();
      flat_p.insert(flat_p.end(), a.begin(), a.end());
      flat_t.insert(flat_t.end(), b.begin(), b.end());
    }
    const auto l1_grad = l1_loss_grad(flat_p, flat_t);
    constexpr double h1 = 1e-6;
    for (size_t i = 0; i < flat_p.size(); ++i) {
      std::vector<double> up = flat_p;
      std::vector<double> down = flat_p;
      up[i] += h1;
      down[i] -= h1;
      const double fd = (l1_loss(up, flat_t) - l1_loss(down, flat_t)) / (2.0 * h1);
      const double rel = relative(l1_grad[i], fd);
      worst_grad = std::max(worst_grad, rel);
      check.expect(rel <= 1e-4, "L1 gradient relative error " + fmt(rel));
    }
  }
  return {8, "loss oracles and gradients", check.ok(),
          check.report(std::to_string(kInstances) + " instances, max loss error " +
                       fmt(worst_value) + " (tol 1e-6), max gradient relative error " +
                       fmt(worst_grad) + " (tol 1e-4)"),
          0.0};
}

// ---- 9 -------------------------------------------------------------------
struct TrackingRun {
  IdSwitchStats stats;
  std::set<int64_t> ids;
};

TrackingRun run_tracker(const std::vector<std::vector<Detection>>& frames,
                        const std::vector<GroundTruthObservation>& gt, double dt,
                        bool voxel_association) {
  AssociationConfig cfg;
  cfg.voxel_association = voxel_association;
  Tracker tracker(cfg);
  std::vector<TrackOutput> outputs;
  for (size_t f = 0; f < frames.size(); ++f) {
    const auto out = tracker.step(frames[f], dt * static_cast<double>(f), static_cast<uint32_t>(f));
    outputs.insert(outputs.end(), out.begin(), out.end());
  }
  TrackingRun run;
  run.stats = count_id_switches(gt, outputs);
  for (const auto& o : outputs) run.ids.insert(o.id);
  return run;
}

CriterionResult tracking(uint64_t) {
  Check check;
  const GridConfig grid;
  constexpr double kDt = 0.5;

  // Three objects at constant velocity, noiseless detections.
  std::vector<std::vector<Detection>> frames(10);
  std::vector<GroundTruthObservation> gt;
  const struct {
    int cls;
    double x, y, vx, vy;
  } objects[] = {{0, -20.0, -5.0, 3.0, 0.5}, {0, 15.0, 10.0, -2.0, -1.0}, {8, 0.0, -15.0, 0.2, 1.2}};
  for (int f = 0; f < 10; ++f) {
    for (size_t o = 0; o < 3; ++o) {
      Box3D box;
      box.cls = objects[o].cls;
      box.center = {objects[o].x + objects[o].vx * kDt * f, objects[o].y + objects[o].vy * kDt * f, 0.0};
      box.velocity = {objects[o].vx, objects[o].vy};
      frames[static_cast<size_t>(f)].push_back(detection_from_box(box, static_cast<uint32_t>(f), grid));
      gt.push_back({static_cast<uint32_t>(f), static_cast<int64_t>(o + 1), box.cls,
                    {box.center[0], box.center[1]}});
    }
  }
  const TrackingRun clean = run_tracker(frames, gt, kDt, true);
  check.expect(clean.stats.id_switches == 0,
               "constant-velocity scene: " + std::to_string(clean.stats.id_switches) + " id switches");
  check.expect(clean.stats.misses == 0, "constant-velocity scene: misses");
  check.expect(clean.ids.size() == 3,
               "constant-velocity scene: " + std::to_string(clean.ids.size()) + " track ids");

  // A slow object whose velocity estimate spikes for one frame, so the
  // predicted center lands 3 m ahead while the query voxel stays put.
  constexpr double kSlowDt = 0.1;
  std::vector<std::vector<Detection>> disp(10);
  std::vector<GroundTruthObservation> disp_gt;
  for (int f = 0; f < 10; ++f) {
    for (int o = 0; o < 2; ++o) {
      Box3D box;
      box.cls = 0;
      box.velocity = o == 0 ? std::array<double, 2>{0.5, 0.0} : std::array<double, 2>{0.0, 0.5};
      const double x0 = o == 0 ? 0.3 : 20.0;
      const double y0 = o == 0 ? 0.3 : 20.0;
      box.center = {x0 + box.velocity[0] * kSlowDt * f, y0 + box.velocity[1] * kSlowDt * f, 0.0};
      Detection d = detection_from_box(box, static_cast<uint32_t>(f), grid);
      if (o == 0 && f == 4) d.box.velocity = {30.0, 0.0};
      disp[static_cast<size_t>(f)].push_back(d);
      disp_gt.push_back({static_cast<uint32_t>(f), o + 1, 0, {box.center[0], box.center[1]}});
    }
  }
  const TrackingRun center_only = run_tracker(disp, disp_gt, kSlowDt, false);
  const TrackingRun with_voxels = run_tracker(disp, disp_gt, kSlowDt, true);
  const int center_errors = center_only.stats.id_switches + center_only.stats.misses;
  check.expect(center_errors >= 1, "center-only matching showed no id switch or miss");
  check.expect(with_voxels.stats.id_switches == 0,
               "voxel association left " + std::to_string(with_voxels.stats.id_switches) +
                   " id switches");
  return {9, "tracking with voxel association", check.ok(),
          check.report("constant-velocity scene: 0 id switches, 3 ids; displaced-center scene: "
                       "center-only " + std::to_string(center_only.stats.id_switches) +
                       " switches + " + std::to_string(center_only.stats.misses) +
                       " misses, with voxel association " +
                       std::to_string(with_voxels.stats.id_switches) + " switches + " +
                       std::to_string(with_voxels.stats.misses) + " misses"),
          0.0};
}

}  // namespace

CriterionResult run_criterion(int id, uint64_t seed) {
  static const std::map<int, std::function<CriterionResult(uint64_t)>> kCriteria = {
      {1, dense_equivalence}, {2, closure_determinism}, {3, pruning},
      {4, height_compression}, {5, union_algebra},     {6, max_pool_selection},
      {7, encode_decode},     {8, loss_oracles},        {9, tracking}};
  const auto it = kCriteria.find(id);
  if (it == kCriteria.end()) {
    fail(ErrorCode::kInvalidArgument, "no criterion " + std::to_string(id));
  }
  const auto start = Clock::now();
  CriterionResult result;
  try {
    result = it->second(seed);
  } catch (const std::exception& e) {
    result.id = id;
    result.title = "criterion " + std::to_string(id);
    result.passed = false;
    result.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = seconds_since(start);
  result.seconds = std::max(result.seconds, elapsed);
  return result;
}

std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" +
         r.title + "): " + r.detail + " [" + fmt(r.seconds) + " s]";
}

}  // namespace sparsedet::testing
