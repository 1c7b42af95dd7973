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

#ifndef SPARSEDET_BACKBONE_H_
#define SPARSEDET_BACKBONE_H_

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "sparsedet/conv.h"
#include "sparsedet/flops.h"
#include "sparsedet/sparse_tensor.h"
#include "sparsedet/voxelizer.h"

namespace sparsedet {

inline constexpr int kNumStages = 6;
inline constexpr int kNumDownsamples = kNumStages - 1;

enum class BackboneMode {
  k3D,  // 3D sparse stages, height compression after the multi-stride merge
  k2D,  // height compression at stride 1, 2D sparse stages afterwards
};

struct BackboneConfig {
  std::vector<int> channels = {16, 32, 64, 128, 128, 128};
  int blocks_per_stage = 2;
  double prune_ratio = 0.5;
  // 1-based indices of the down-sampling layers that prune (1 feeds stage 2).
  std::vector<int> prune_stages = {1, 2, 3};
  BackboneMode mode = BackboneMode::k3D;
  int kernel_size = 3;
  int in_channels = kVoxelChannels;
  PrunedVoxelPolicy pruned_policy = PrunedVoxelPolicy::kCenterOnly;

  int dims() const { return mode == BackboneMode::k3D ? 3 : 2; }
  int out_channels() const { return channels[3]; }
  bool prunes(int downsample_index) const;
  void validate() const;
};

struct ResidualBlock {
  ConvLayer conv1;
  ConvLayer conv2;
};

struct Stage {
  ConvLayer down;  // unused (empty) for stage 1
  std::vector<ResidualBlock> blocks;
};

// Normalization is already folded into every layer.
struct BackboneWeights {
  ConvLayer stem;
  std::array<Stage, kNumStages> stages;

  // Throws when layer shapes do not follow `cfg`.
  void check(const BackboneConfig& cfg) const;
};

// He-scaled random weights for smoke tests and the weight generator.
BackboneWeights random_backbone_weights(const BackboneConfig& cfg,
                                        std::mt19937_64& rng);
ConvLayer random_conv(ConvMode mode, int dims, int kernel_size, int in_channels,
                      int out_channels, std::mt19937_64& rng);

// ReLU(conv2(ReLU(conv1(t))) + t)
SparseTensor residual_block(const SparseTensor& t, const ConvLayer& conv1,
                            const ConvLayer& conv2);

// F_1 .. F_6 at strides 1, 2, 4, 8, 16, 32.
struct StageOutputs {
  std::array<SparseTensor, kNumStages> features;
};

StageOutputs run_stages(const SparseTensor& input, const BackboneWeights& w,
                        const BackboneConfig& cfg, FlopsReport* report = nullptr);

// Multiplies every coordinate by `factor` and re-labels the tensor with the
// given stride and extent.
SparseTensor rescale_coords(const SparseTensor& t, int factor, int stride,
                            const Coord& extent);

// F_4 u F_5' u F_6' aligned to F_4's resolution; features of coincident
// sites are summed in the order F_4, F_5, F_6.
SparseTensor merge_multistride(const SparseTensor& f4, const SparseTensor& f5,
                               const SparseTensor& f6);

// Full backbone: stages, multi-stride merge and height compression. Returns
// a 2D stride-8 tensor of width channels[3].
SparseTensor forward_backbone(const SparseTensor& input, const BackboneWeights& w,
                              const BackboneConfig& cfg);

// forward_backbone() with per-layer FLOPs and per-stage voxel counts.
FlopsReport profile_backbone(const SparseTensor& input, const BackboneWeights& w,
                             const BackboneConfig& cfg);

}  // namespace sparsedet

#endif  // SPARSEDET_BACKBONE_H_
