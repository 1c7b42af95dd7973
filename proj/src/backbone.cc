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

#include "sparsedet/backbone.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsedet/errors.h"
#include "sparsedet/pooling.h"

namespace sparsedet {

namespace {

void expect_layer(const ConvLayer& layer, ConvMode mode, int dims, int kernel,
                  int cin, int cout, const std::string& name) {
  layer.validate();
  if (layer.mode != mode || layer.dims != dims || layer.kernel_size != kernel) {
    fail(ErrorCode::kShapeMismatch, name + ": unexpected mode or kernel shape");
  }
  if (layer.in_channels != cin || layer.out_channels != cout) {
    fail(ErrorCode::kChannelMismatch,
         name + ": expected " + std::to_string(cin) + "->" + std::to_string(cout) +
             " channels, got " + std::to_string(layer.in_channels) + "->" +
             std::to_string(layer.out_channels));
  }
}

SparseTensor relu(SparseTensor t) {
  std::vector<float> f(t.features().begin(), t.features().end());
  relu_inplace(f);
  return t.with_features(std::move(f), t.channels());
}

// A conv is stored without pruning settings; the config decides them.
SparseTensor downsample(const SparseTensor& x, const ConvLayer& layer,
                        double ratio, PrunedVoxelPolicy policy,
                        FlopsReport* report, const std::string& name) {
  const ConvLayer* effective = &layer;
  ConvLayer tuned;
  if (layer.prune_ratio != ratio || layer.pruned_policy != policy) {
    tuned = layer;
    tuned.prune_ratio = ratio;
    tuned.pruned_policy = policy;
    effective = &tuned;
  }
  SparseTensor y = strided_conv_downsample(x, *effective);
  if (report) report->add(count_flops(x, *effective, y, name));
  return relu(std::move(y));
}

}  // namespace

bool BackboneConfig::prunes(int downsample_index) const {
  return std::find(prune_stages.begin(), prune_stages.end(), downsample_index) !=
         prune_stages.end();
}

void BackboneConfig::validate() const {
  if (channels.size() != kNumStages) {
    fail(ErrorCode::kInvalidArgument, "backbone needs exactly 6 channel widths");
  }
  for (int c : channels) {
    if (c < 1) fail(ErrorCode::kInvalidArgument, "channel widths must be positive");
  }
  if (channels[3] != channels[4] || channels[3] != channels[5]) {
    fail(ErrorCode::kChannelMismatch,
         "stages 4-6 must share a width for the multi-stride merge");
  }
  if (blocks_per_stage < 0) {
    fail(ErrorCode::kInvalidArgument, "blocks_per_stage must be >= 0");
  }
  if (!(prune_ratio >= 0.0 && prune_ratio < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "prune_ratio must lie in [0, 1)");
  }
  for (int s : prune_stages) {
    if (s < 1 || s > kNumDownsamples) {
      fail(ErrorCode::kInvalidArgument,
           "prune stage " + std::to_string(s) + " outside 1..5");
    }
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "kernel_size must be odd");
  }
  if (in_channels < 1) fail(ErrorCode::kInvalidArgument, "in_channels must be positive");
}

void BackboneWeights::check(const BackboneConfig& cfg) const {
  cfg.validate();
  const int d = cfg.dims();
  const int k = cfg.kernel_size;
  expect_layer(stem, ConvMode::kSubmanifold, d, k, cfg.in_channels,
               cfg.channels[0], "stem");
  for (int s = 0; s < kNumStages; ++s) {
    const Stage& stage = stages[s];
    const std::string prefix = "stage" + std::to_string(s + 1);
    const int c = cfg.channels[s];
    if (s > 0) {
      expect_layer(stage.down, ConvMode::kStrided, d, k, cfg.channels[s - 1], c,
                   prefix + ".down");
    }
    if (static_cast<int>(stage.blocks.size()) != cfg.blocks_per_stage) {
      fail(ErrorCode::kShapeMismatch, prefix + ": wrong residual block count");
    }
    for (size_t b = 0; b < stage.blocks.size(); ++b) {
      const std::string block = prefix + ".block" + std::to_string(b + 1);
      expect_layer(stage.blocks[b].conv1, ConvMode::kSubmanifold, d, k, c, c,
                   block + ".conv1");
      expect_layer(stage.blocks[b].conv2, ConvMode::kSubmanifold, d, k, c, c,
                   block + ".conv2");
    }
  }
}

ConvLayer random_conv(ConvMode mode, int dims, int kernel_size, int in_channels,
                      int out_channels, std::mt19937_64& rng) {
  ConvLayer layer = ConvLayer::zeros(mode, dims, kernel_size, in_channels,
                                     out_channels);
  const double fan_in = static_cast<double>(layer.num_offsets()) * in_channels;
  std::normal_distribution<float> weight(0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
  std::normal_distribution<float> bias(0.0f, 0.01f);
  for (float& w : layer.weights) w = weight(rng);
  for (float& b : layer.bias) b = bias(rng);
  return layer;
}

BackboneWeights random_backbone_weights(const BackboneConfig& cfg,
                                        std::mt19937_64& rng) {
  cfg.validate();
  const int d = cfg.dims();
  const int k = cfg.kernel_size;
  BackboneWeights w;
  w.stem = random_conv(ConvMode::kSubmanifold, d, k, cfg.in_channels,
                       cfg.channels[0], rng);
  for (int s = 0; s < kNumStages; ++s) {
    const int c = cfg.channels[s];
    if (s > 0) {
      w.stages[s].down = random_conv(ConvMode::kStrided, d, k,
                                     cfg.channels[s - 1], c, rng);
    }
    for (int b = 0; b < cfg.blocks_per_stage; ++b) {
      ResidualBlock block;
      block.conv1 = random_conv(ConvMode::kSubmanifold, d, k, c, c, rng);
      block.conv2 = random_conv(ConvMode::kSubmanifold, d, k, c, c, rng);
      // Damp the residual branch so activations stay bounded with depth.
      for (float& v : block.conv2.weights) v *= 0.5f;
      w.stages[s].blocks.push_back(std::move(block));
    }
  }
  return w;
}

SparseTensor residual_block(const SparseTensor& t, const ConvLayer& conv1,
                            const ConvLayer& conv2) {
  const int c = t.channels();
  if (conv1.in_channels != c || conv1.out_channels != c ||
      conv2.in_channels != c || conv2.out_channels != c) {
    fail(ErrorCode::kChannelMismatch,
         "residual block layers must map width " + std::to_string(c) + " to itself");
  }
  SparseTensor h = relu(submanifold_conv(t, conv1));
  SparseTensor h2 = submanifold_conv(h, conv2);
  std::vector<float> out(h2.features().begin(), h2.features().end());
  const auto skip = t.features();
  for (size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
  relu_inplace(out);
  return t.with_features(std::move(out), c);
}

StageOutputs run_stages(const SparseTensor& input, const BackboneWeights& w,
                        const BackboneConfig& cfg, FlopsReport* report) {
  cfg.validate();
  if (input.stride() != 1) {
    fail(ErrorCode::kInvalidArgument, "backbone input must be at stride 1");
  }
  if (input.channels() != cfg.in_channels) {
    fail(ErrorCode::kChannelMismatch,
         "backbone expects " + std::to_string(cfg.in_channels) +
             " input channels, got " + std::to_string(input.channels()));
  }
  SparseTensor x = input;
  if (cfg.mode == BackboneMode::k2D && x.dims() == 3) x = height_compress(x);
  if (x.dims() != cfg.dims()) {
    fail(ErrorCode::kInvalidArgument, "input dimensionality does not match mode");
  }

  auto run_blocks = [&](SparseTensor t, int s) {
    const Stage& stage = w.stages[s];
    for (size_t b = 0; b < stage.blocks.size(); ++b) {
      const auto& blk = stage.blocks[b];
      SparseTensor next = residual_block(t, blk.conv1, blk.conv2);
      if (report) {
        const std::string name = "stage" + std::to_string(s + 1) + ".block" +
                                 std::to_string(b + 1);
        report->add(count_flops(t, blk.conv1, t, name + ".conv1"));
        report->add(count_flops(t, blk.conv2, t, name + ".conv2"));
      }
      t = std::move(next);
    }
    return t;
  };

  StageOutputs out;
  size_t stage_begin = report ? report->entries.size() : 0;
  auto close_stage = [&](int s) {
    if (!report) return;
    StageStats stats;
    stats.stage = s + 1;
    stats.stride = out.features[s].stride();
    stats.voxels = out.features[s].size();
    for (size_t e = stage_begin; e < report->entries.size(); ++e) {
      stats.flops += report->entries[e].flops;
    }
    report->stages.push_back(stats);
    stage_begin = report->entries.size();
  };

  SparseTensor stem_out = relu(submanifold_conv(x, w.stem));
  if (report) report->add(count_flops(x, w.stem, stem_out, "stage1.stem"));
  out.features[0] = run_blocks(std::move(stem_out), 0);
  close_stage(0);

  for (int s = 1; s < kNumStages; ++s) {
    const double ratio = cfg.prunes(s) ? cfg.prune_ratio : 0.0;
    SparseTensor down = downsample(out.features[s - 1], w.stages[s].down, ratio,
                                   cfg.pruned_policy, report,
                                   "stage" + std::to_string(s + 1) + ".down");
    out.features[s] = run_blocks(std::move(down), s);
    close_stage(s);
  }
  return out;
}

SparseTensor rescale_coords(const SparseTensor& t, int factor, int stride,
                            const Coord& extent) {
  std::vector<Coord> coords(t.coords().begin(), t.coords().end());
  for (Coord& c : coords) {
    for (int a = 0; a < t.dims(); ++a) c[a] *= factor;
  }
  // Positive scaling preserves canonical order.
  return SparseTensor::from_canonical(
      t.dims(), std::move(coords),
      std::vector<float>(t.features().begin(), t.features().end()), t.channels(),
      stride, extent);
}

SparseTensor merge_multistride(const SparseTensor& f4, const SparseTensor& f5,
                               const SparseTensor& f6) {
  if (f5.channels() != f4.channels() || f6.channels() != f4.channels()) {
    fail(ErrorCode::kChannelMismatch, "multi-stride merge needs equal widths");
  }
  if (f5.dims() != f4.dims() || f6.dims() != f4.dims()) {
    fail(ErrorCode::kInvalidArgument, "multi-stride merge needs equal dims");
  }
  if (f5.stride() != 2 * f4.stride() || f6.stride() != 4 * f4.stride()) {
    fail(ErrorCode::kInvalidArgument, "multi-stride merge expects strides s, 2s, 4s");
  }
  const SparseTensor f5r = rescale_coords(f5, 2, f4.stride(), f4.extent());
  const SparseTensor f6r = rescale_coords(f6, 4, f4.stride(), f4.extent());

  std::vector<Coord> coords;
  std::vector<float> features;
  for (const SparseTensor* t : {&f4, &f5r, &f6r}) {
    coords.insert(coords.end(), t->coords().begin(), t->coords().end());
    features.insert(features.end(), t->features().begin(), t->features().end());
  }
  return SparseTensor::build(f4.dims(), std::move(coords), std::move(features),
                             f4.channels(), f4.stride(), f4.extent(),
                             DuplicatePolicy::kMerge);
}

SparseTensor forward_backbone(const SparseTensor& input, const BackboneWeights& w,
                              const BackboneConfig& cfg) {
  const StageOutputs stages = run_stages(input, w, cfg);
  SparseTensor merged =
      merge_multistride(stages.features[3], stages.features[4], stages.features[5]);
  return merged.dims() == 3 ? height_compress(merged) : merged;
}

FlopsReport profile_backbone(const SparseTensor& input, const BackboneWeights& w,
                             const BackboneConfig& cfg) {
  FlopsReport report;
  run_stages(input, w, cfg, &report);
  return report;
}

}  // namespace sparsedet
