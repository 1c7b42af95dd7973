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

#include "sparsedet/conv.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sparsedet/errors.h"
#include "sparsedet/parallel.h"

namespace sparsedet {

namespace {

// Floor division by two; right shift of a negative value is arithmetic.
constexpr int32_t floor_half(int32_t v) { return v >> 1; }

void check_input(const SparseTensor& in, const ConvLayer& layer,
                 ConvMode expected) {
  layer.validate();
  if (layer.mode != expected) {
    fail(ErrorCode::kInvalidArgument,
         expected == ConvMode::kSubmanifold ? "layer is not submanifold"
                                            : "layer is not strided");
  }
  if (in.dims() != layer.dims) {
    fail(ErrorCode::kInvalidArgument,
         "tensor is " + std::to_string(in.dims()) + "D but kernel is " +
             std::to_string(layer.dims) + "D");
  }
  if (in.channels() != layer.in_channels) {
    fail(ErrorCode::kChannelMismatch,
         "tensor width " + std::to_string(in.channels()) +
             " != layer input width " + std::to_string(layer.in_channels));
  }
}

Coord add(const Coord& a, const Coord& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

Coord halve(const Coord& c) {
  return {floor_half(c[0]), floor_half(c[1]), floor_half(c[2])};
}

bool within(const Coord& c, const Coord& extent) {
  return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < extent[0] &&
         c[1] < extent[1] && c[2] < extent[2];
}

// Which (row, offset) pairs of a strided layer are realized.
struct Eligibility {
  std::vector<bool> dilates;
  int center;
  bool keep_center;

  bool operator()(size_t row, int offset) const {
    return dilates[row] || (keep_center && offset == center);
  }
};

Eligibility strided_eligibility(const SparseTensor& in, const ConvLayer& layer) {
  return {dilation_mask(in, layer.prune_ratio), layer.center_offset(),
          layer.pruned_policy == PrunedVoxelPolicy::kCenterOnly};
}

}  // namespace

int ConvLayer::num_offsets() const {
  int n = 1;
  for (int a = 0; a < dims; ++a) n *= kernel_size;
  return n;
}

size_t ConvLayer::weight_count() const {
  return static_cast<size_t>(num_offsets()) * static_cast<size_t>(in_channels) *
         static_cast<size_t>(out_channels);
}

void ConvLayer::validate() const {
  if (dims != 2 && dims != 3) {
    fail(ErrorCode::kInvalidArgument, "kernel dims must be 2 or 3");
  }
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    fail(ErrorCode::kInvalidArgument,
         "kernel size must be odd, got " + std::to_string(kernel_size));
  }
  if (in_channels < 1 || out_channels < 1) {
    fail(ErrorCode::kInvalidArgument, "channel counts must be positive");
  }
  if (!(prune_ratio >= 0.0 && prune_ratio < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "prune ratio must lie in [0, 1)");
  }
  if (weights.size() != weight_count()) {
    fail(ErrorCode::kShapeMismatch,
         "expected " + std::to_string(weight_count()) + " weights, got " +
             std::to_string(weights.size()));
  }
  if (bias.size() != static_cast<size_t>(out_channels)) {
    fail(ErrorCode::kShapeMismatch, "bias length != output channels");
  }
}

ConvLayer ConvLayer::zeros(ConvMode mode, int dims, int kernel_size,
                           int in_channels, int out_channels) {
  ConvLayer layer;
  layer.mode = mode;
  layer.dims = dims;
  layer.kernel_size = kernel_size;
  layer.in_channels = in_channels;
  layer.out_channels = out_channels;
  layer.weights.assign(layer.weight_count(), 0.0f);
  layer.bias.assign(static_cast<size_t>(out_channels), 0.0f);
  return layer;
}

std::vector<Coord> kernel_offsets(int dims, int kernel_size) {
  const int r = kernel_size / 2;
  const int zr = dims == 3 ? r : 0;
  std::vector<Coord> offsets;
  for (int dz = -zr; dz <= zr; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) offsets.push_back({dx, dy, dz});
    }
  }
  return offsets;
}

Rulebook submanifold_rulebook_at(const SparseTensor& in, int kernel_size,
                                 std::span<const size_t> rows) {
  const auto offsets = kernel_offsets(in.dims(), kernel_size);
  Rulebook rules;
  rules.out_begin.reserve(rows.size() + 1);
  rules.out_begin.push_back(0);
  for (size_t row : rows) {
    const Coord& c = in.coord(row);
    for (size_t o = 0; o < offsets.size(); ++o) {
      if (auto j = in.find(add(c, offsets[o]))) {
        rules.in_row.push_back(static_cast<uint32_t>(*j));
        rules.offset.push_back(static_cast<uint16_t>(o));
      }
    }
    rules.out_begin.push_back(static_cast<uint32_t>(rules.in_row.size()));
  }
  return rules;
}

Rulebook submanifold_rulebook(const SparseTensor& in, int kernel_size) {
  std::vector<size_t> rows(in.size());
  std::iota(rows.begin(), rows.end(), size_t{0});
  return submanifold_rulebook_at(in, kernel_size, rows);
}

Rulebook strided_rulebook(const SparseTensor& in, const ConvLayer& layer,
                          const SparseTensor& out) {
  const auto offsets = kernel_offsets(in.dims(), layer.kernel_size);
  const Eligibility eligible = strided_eligibility(in, layer);

  // Offset-major, canonical input order inside each offset.
  struct Triple {
    uint32_t out_row;
    uint32_t in_row;
    uint16_t offset;
  };
  std::vector<Triple> triples;
  for (size_t o = 0; o < offsets.size(); ++o) {
    for (size_t i = 0; i < in.size(); ++i) {
      if (!eligible(i, static_cast<int>(o))) continue;
      if (auto s = out.find(halve(add(in.coord(i), offsets[o])))) {
        triples.push_back({static_cast<uint32_t>(*s), static_cast<uint32_t>(i),
                           static_cast<uint16_t>(o)});
      }
    }
  }

  // Stable counting sort by output row keeps the accumulation order.
  Rulebook rules;
  rules.out_begin.assign(out.size() + 1, 0);
  for (const Triple& t : triples) ++rules.out_begin[t.out_row + 1];
  for (size_t k = 1; k < rules.out_begin.size(); ++k) {
    rules.out_begin[k] += rules.out_begin[k - 1];
  }
  rules.in_row.resize(triples.size());
  rules.offset.resize(triples.size());
  std::vector<uint32_t> cursor(rules.out_begin.begin(), rules.out_begin.end() - 1);
  for (const Triple& t : triples) {
    const uint32_t slot = cursor[t.out_row]++;
    rules.in_row[slot] = t.in_row;
    rules.offset[slot] = t.offset;
  }
  return rules;
}

std::vector<float> apply_rulebook(const SparseTensor& in, const ConvLayer& layer,
                                  const Rulebook& rules) {
  const size_t cin = static_cast<size_t>(layer.in_channels);
  const size_t cout = static_cast<size_t>(layer.out_channels);
  const size_t n_out = rules.num_outputs();
  std::vector<float> out(n_out * cout);
  parallel_for(n_out, [&](size_t begin, size_t end) {
    for (size_t s = begin; s < end; ++s) {
      float* acc = out.data() + s * cout;
      std::copy(layer.bias.begin(), layer.bias.end(), acc);
      for (uint32_t k = rules.out_begin[s]; k < rules.out_begin[s + 1]; ++k) {
        const float* f = in.row(rules.in_row[k]).data();
        const float* w = layer.weights.data() + rules.offset[k] * cin * cout;
        for (size_t ci = 0; ci < cin; ++ci) {
          const float v = f[ci];
          if (v == 0.0f) continue;
          const float* wr = w + ci * cout;
          for (size_t co = 0; co < cout; ++co) acc[co] += v * wr[co];
        }
      }
    }
  }, 64);
  return out;
}

SparseTensor submanifold_conv(const SparseTensor& in, const ConvLayer& layer) {
  check_input(in, layer, ConvMode::kSubmanifold);
  const Rulebook rules = submanifold_rulebook(in, layer.kernel_size);
  return in.with_features(apply_rulebook(in, layer, rules), layer.out_channels);
}

std::vector<float> submanifold_conv_at(const SparseTensor& in,
                                       const ConvLayer& layer,
                                       std::span<const size_t> rows) {
  check_input(in, layer, ConvMode::kSubmanifold);
  for (size_t r : rows) {
    if (r >= in.size()) {
      fail(ErrorCode::kInvalidArgument, "row " + std::to_string(r) + " out of range");
    }
  }
  const Rulebook rules = submanifold_rulebook_at(in, layer.kernel_size, rows);
  return apply_rulebook(in, layer, rules);
}

size_t dilation_count(size_t n, double prune_ratio) {
  if (!(prune_ratio >= 0.0 && prune_ratio < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "prune ratio must lie in [0, 1)");
  }
  const double keep = (1.0 - prune_ratio) * static_cast<double>(n);
  // Absorb representation error such as (1 - 0.7) * 10 = 3.0000000000000004.
  const double k = std::ceil(keep - 1e-9 * std::max(1.0, keep));
  return std::min(n, static_cast<size_t>(std::max(0.0, k)));
}

std::vector<bool> dilation_mask(const SparseTensor& t, double prune_ratio) {
  const size_t n = t.size();
  const size_t keep = dilation_count(n, prune_ratio);
  if (keep == n) return std::vector<bool>(n, true);

  const int c = t.channels();
  std::vector<float> magnitude(n, 0.0f);
  for (size_t i = 0; i < n; ++i) {
    float sum = 0.0f;
    for (float v : t.row(i)) sum += std::fabs(v);
    magnitude[i] = c > 0 ? sum / static_cast<float>(c) : 0.0f;
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (magnitude[a] != magnitude[b]) return magnitude[a] > magnitude[b];
    return a < b;
  });
  std::vector<bool> mask(n, false);
  for (size_t k = 0; k < keep; ++k) mask[order[k]] = true;
  return mask;
}

std::vector<Coord> select_dilation_set(const SparseTensor& t, double prune_ratio) {
  const auto mask = dilation_mask(t, prune_ratio);
  std::vector<Coord> out;
  for (size_t i = 0; i < t.size(); ++i) {
    if (mask[i]) out.push_back(t.coord(i));
  }
  return out;
}

std::vector<Coord> strided_output_sites(const SparseTensor& in,
                                        const ConvLayer& layer) {
  const auto offsets = kernel_offsets(in.dims(), layer.kernel_size);
  const Eligibility eligible = strided_eligibility(in, layer);
  const Coord out_extent = halve_extent(in.extent(), in.dims());
  std::vector<uint64_t> keys;
  keys.reserve(in.size() * 2);
  for (size_t i = 0; i < in.size(); ++i) {
    for (size_t o = 0; o < offsets.size(); ++o) {
      if (!eligible(i, static_cast<int>(o))) continue;
      const Coord s = halve(add(in.coord(i), offsets[o]));
      if (within(s, out_extent)) keys.push_back(pack_coord(s));
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Coord> sites(keys.size());
  std::transform(keys.begin(), keys.end(), sites.begin(), unpack_coord);
  return sites;
}

SparseTensor strided_conv_downsample(const SparseTensor& in,
                                     const ConvLayer& layer) {
  check_input(in, layer, ConvMode::kStrided);
  const Coord out_extent = halve_extent(in.extent(), in.dims());
  const int out_stride = in.stride() * 2;
  SparseTensor sites = SparseTensor::from_canonical(
      in.dims(), strided_output_sites(in, layer), {}, 0, out_stride, out_extent);
  const Rulebook rules = strided_rulebook(in, layer, sites);
  return sites.with_features(apply_rulebook(in, layer, rules), layer.out_channels);
}

void relu_inplace(std::vector<float>& values) {
  for (float& v : values) v = v > 0.0f ? v : 0.0f;
}

}  // namespace sparsedet
