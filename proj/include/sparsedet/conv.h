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

#ifndef SPARSEDET_CONV_H_
#define SPARSEDET_CONV_H_

#include <cstdint>
#include <span>
#include <vector>

#include "sparsedet/sparse_tensor.h"

namespace sparsedet {

enum class ConvMode { kSubmanifold, kStrided };

// How a strided layer treats voxels left out of the dilation set.
enum class PrunedVoxelPolicy {
  kCenterOnly,  // still contribute through the center offset
  kDrop,        // contribute nothing
};

// Weights of one sparse convolution. `weights` is laid out as
// [kernel offset][in channel][out channel] with offsets in the order returned
// by kernel_offsets(); stride-2 layers always halve coordinates.
struct ConvLayer {
  ConvMode mode = ConvMode::kSubmanifold;
  int dims = 3;
  int kernel_size = 3;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  double prune_ratio = 0.0;
  PrunedVoxelPolicy pruned_policy = PrunedVoxelPolicy::kCenterOnly;

  int num_offsets() const;
  int center_offset() const { return num_offsets() / 2; }
  size_t weight_count() const;

  // Throws kInvalidArgument / kShapeMismatch on a malformed layer.
  void validate() const;

  static ConvLayer zeros(ConvMode mode, int dims, int kernel_size,
                         int in_channels, int out_channels);
};

// Offsets of a centered kernel, z-major then y then x (canonical order).
// For dims == 2 the z component is always 0.
std::vector<Coord> kernel_offsets(int dims, int kernel_size);

// (input site, kernel offset) pairs grouped by output site. Within one output
// the pairs are ordered by offset, then by canonical input order; this is
// also the accumulation order of the convolution.
struct Rulebook {
  std::vector<uint32_t> out_begin;  // size() == outputs + 1
  std::vector<uint32_t> in_row;
  std::vector<uint16_t> offset;

  size_t num_outputs() const { return out_begin.empty() ? 0 : out_begin.size() - 1; }
  size_t num_pairs() const { return in_row.size(); }
};

Rulebook submanifold_rulebook(const SparseTensor& in, int kernel_size);
// Same rules restricted to the given output rows (rows of `in`).
Rulebook submanifold_rulebook_at(const SparseTensor& in, int kernel_size,
                                 std::span<const size_t> rows);
Rulebook strided_rulebook(const SparseTensor& in, const ConvLayer& layer,
                          const SparseTensor& out);

SparseTensor submanifold_conv(const SparseTensor& in, const ConvLayer& layer);

// Evaluates a submanifold layer only at `rows`; returns rows.size() x C_out
// values identical to the corresponding rows of submanifold_conv().
std::vector<float> submanifold_conv_at(const SparseTensor& in,
                                       const ConvLayer& layer,
                                       std::span<const size_t> rows);

// Number of voxels allowed to dilate: ceil((1 - ratio) * n).
size_t dilation_count(size_t n, double prune_ratio);

// Per-row flag: true when the voxel is among the dilation_count() rows with
// the largest channel-averaged |feature|. Equal magnitudes favor the
// canonically earlier row.
std::vector<bool> dilation_mask(const SparseTensor& t, double prune_ratio);
std::vector<Coord> select_dilation_set(const SparseTensor& t, double prune_ratio);

// Output coordinates of a stride-2 layer, canonical order.
std::vector<Coord> strided_output_sites(const SparseTensor& in,
                                        const ConvLayer& layer);

SparseTensor strided_conv_downsample(const SparseTensor& in,
                                     const ConvLayer& layer);

// Applies `layer` to the pairs of `rules`; `out` supplies the output sites.
std::vector<float> apply_rulebook(const SparseTensor& in, const ConvLayer& layer,
                                  const Rulebook& rules);

void relu_inplace(std::vector<float>& values);

}  // namespace sparsedet

#endif  // SPARSEDET_CONV_H_
