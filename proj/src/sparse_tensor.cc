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

#include "sparsedet/sparse_tensor.h"

#include <algorithm>
#include <numeric>
#include <utility>

#include "sparsedet/errors.h"

namespace sparsedet {

std::string to_string(const Coord& c) {
  return "(" + std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
         std::to_string(c[2]) + ")";
}

Coord halve_extent(const Coord& extent, int dims) {
  Coord out = extent;
  for (int a = 0; a < dims; ++a) out[a] = (extent[a] + 1) / 2;
  return out;
}

SparseTensor::SparseTensor() : sites_(make_sites({})) {}

SparseTensor::SparseTensor(int dims, int channels, int stride, Coord extent,
                           std::shared_ptr<const Sites> sites,
                           std::vector<float> features)
    : dims_(dims),
      channels_(channels),
      stride_(stride),
      extent_(extent),
      sites_(std::move(sites)),
      features_(std::move(features)) {}

void SparseTensor::check_geometry(int dims, int channels, int stride,
                                  const Coord& extent) {
  if (dims != 2 && dims != 3) {
    fail(ErrorCode::kInvalidArgument,
         "dims must be 2 or 3, got " + std::to_string(dims));
  }
  if (channels < 0) fail(ErrorCode::kInvalidArgument, "negative channel count");
  if (stride < 1) fail(ErrorCode::kInvalidArgument, "stride must be positive");
  for (int a = 0; a < 3; ++a) {
    if (extent[a] < 1 || extent[a] > kMaxExtent) {
      fail(ErrorCode::kInvalidArgument, "extent " + to_string(extent) +
                                            " outside [1, 2^21] on axis " +
                                            std::to_string(a));
    }
  }
  if (dims == 2 && extent[2] != 1) {
    fail(ErrorCode::kInvalidArgument, "2D tensors need extent z == 1");
  }
}

std::shared_ptr<const SparseTensor::Sites> SparseTensor::make_sites(std::vector<Coord> coords) {
  auto sites = std::make_shared<Sites>();
  sites->index.reserve(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) {
    sites->index.emplace(pack_coord(coords[i]), static_cast<uint32_t>(i));
  }
  sites->coords = std::move(coords);
  return sites;
}

bool SparseTensor::in_extent(const Coord& c) const {
  for (int a = 0; a < 3; ++a) {
    if (c[a] < 0 || c[a] >= extent_[a]) return false;
  }
  return true;
}

std::optional<size_t> SparseTensor::find(const Coord& c) const {
  if (!in_extent(c)) return std::nullopt;
  auto it = sites_->index.find(pack_coord(c));
  if (it == sites_->index.end()) return std::nullopt;
  return it->second;
}

SparseTensor SparseTensor::empty(int dims, int channels, int stride,
                                 Coord extent) {
  check_geometry(dims, channels, stride, extent);
  return SparseTensor(dims, channels, stride, extent, make_sites({}), {});
}

SparseTensor SparseTensor::build(int dims, std::vector<Coord> coords,
                                 std::vector<float> features, int channels,
                                 int stride, Coord extent,
                                 DuplicatePolicy duplicates) {
  check_geometry(dims, channels, stride, extent);
  const size_t width = static_cast<size_t>(channels);
  if (features.size() != coords.size() * width) {
    fail(ErrorCode::kShapeMismatch,
         std::to_string(coords.size()) + " coordinates but " +
             std::to_string(features.size()) + " feature values at width " +
             std::to_string(channels));
  }
  for (const Coord& c : coords) {
    for (int a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= extent[a]) {
        fail(ErrorCode::kOutOfExtent,
             "coordinate " + to_string(c) + " outside extent " + to_string(extent));
      }
    }
  }

  std::vector<uint64_t> keys(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) keys[i] = pack_coord(coords[i]);
  std::vector<size_t> order(coords.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return keys[a] < keys[b]; });

  std::vector<Coord> out_coords;
  std::vector<float> out_features;
  out_coords.reserve(coords.size());
  out_features.reserve(features.size());
  for (size_t k = 0; k < order.size(); ++k) {
    const size_t src = order[k];
    const float* f = features.data() + src * width;
    if (!out_coords.empty() && pack_coord(out_coords.back()) == keys[src]) {
      if (duplicates == DuplicatePolicy::kReject) {
        fail(ErrorCode::kDuplicateCoordinate,
             "duplicate coordinate " + to_string(coords[src]));
      }
      float* dst = out_features.data() + (out_coords.size() - 1) * width;
      for (size_t c = 0; c < width; ++c) dst[c] += f[c];
      continue;
    }
    out_coords.push_back(coords[src]);
    out_features.insert(out_features.end(), f, f + width);
  }
  return SparseTensor(dims, channels, stride, extent,
                      make_sites(std::move(out_coords)), std::move(out_features));
}

SparseTensor SparseTensor::from_canonical(int dims, std::vector<Coord> coords,
                                          std::vector<float> features,
                                          int channels, int stride,
                                          Coord extent) {
  check_geometry(dims, channels, stride, extent);
  if (features.size() != coords.size() * static_cast<size_t>(channels)) {
    fail(ErrorCode::kShapeMismatch, "feature buffer does not match coordinates");
  }
  for (size_t i = 0; i < coords.size(); ++i) {
    const Coord& c = coords[i];
    for (int a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= extent[a]) {
        fail(ErrorCode::kOutOfExtent,
             "coordinate " + to_string(c) + " outside extent " + to_string(extent));
      }
    }
    if (i > 0 && !canonical_less(coords[i - 1], c)) {
      fail(ErrorCode::kInvalidArgument,
           "coordinates not strictly canonical at row " + std::to_string(i));
    }
  }
  return SparseTensor(dims, channels, stride, extent,
                      make_sites(std::move(coords)), std::move(features));
}

SparseTensor SparseTensor::with_features(std::vector<float> features,
                                         int channels) const {
  if (channels < 0 || features.size() != size() * static_cast<size_t>(channels)) {
    fail(ErrorCode::kShapeMismatch, "feature buffer does not match site count");
  }
  return SparseTensor(dims_, channels, stride_, extent_, sites_,
                      std::move(features));
}

}  // namespace sparsedet
