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

#ifndef SPARSEDET_SPARSE_TENSOR_H_
#define SPARSEDET_SPARSE_TENSOR_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sparsedet {

// Voxel coordinate (x, y, z). Two-dimensional tensors keep z == 0.
using Coord = std::array<int32_t, 3>;

inline constexpr int kCoordBits = 21;
inline constexpr int32_t kMaxExtent = int32_t{1} << kCoordBits;

// Packs an in-range coordinate into a 63-bit key. Integer order of the keys
// is the canonical (z, y, x) lexicographic order.
constexpr uint64_t pack_coord(const Coord& c) {
  return (static_cast<uint64_t>(c[2]) << (2 * kCoordBits)) |
         (static_cast<uint64_t>(c[1]) << kCoordBits) |
         static_cast<uint64_t>(c[0]);
}

constexpr Coord unpack_coord(uint64_t key) {
  constexpr uint64_t kMask = (uint64_t{1} << kCoordBits) - 1;
  return {static_cast<int32_t>(key & kMask),
          static_cast<int32_t>((key >> kCoordBits) & kMask),
          static_cast<int32_t>(key >> (2 * kCoordBits))};
}

constexpr bool canonical_less(const Coord& a, const Coord& b) {
  if (a[2] != b[2]) return a[2] < b[2];
  if (a[1] != b[1]) return a[1] < b[1];
  return a[0] < b[0];
}

std::string to_string(const Coord& c);

enum class DuplicatePolicy { kReject, kMerge };

// Active voxel coordinates plus one feature row per coordinate.
//
// Rows are stored in canonical coordinate order and the coordinate set is
// immutable; tensors produced by submanifold operations share the site table
// of their input. Features are row-major, `size() x channels()`.
class SparseTensor {
 public:
  // Empty 3D tensor with zero channels at stride 1.
  SparseTensor();

  // Validates and canonicalizes arbitrary input. Throws kShapeMismatch when
  // the feature buffer disagrees with the coordinate count, kOutOfExtent for
  // coordinates outside [0, extent) and kDuplicateCoordinate for repeated
  // coordinates under kReject. kMerge sums duplicate rows in input order.
  static SparseTensor build(int dims, std::vector<Coord> coords,
                            std::vector<float> features, int channels,
                            int stride, Coord extent,
                            DuplicatePolicy duplicates = DuplicatePolicy::kReject);

  static SparseTensor empty(int dims, int channels, int stride, Coord extent);

  // For operations that already emit strictly increasing canonical
  // coordinates. Order and bounds are still checked.
  static SparseTensor from_canonical(int dims, std::vector<Coord> coords,
                                     std::vector<float> features, int channels,
                                     int stride, Coord extent);

  // Same sites, new features.
  SparseTensor with_features(std::vector<float> features, int channels) const;

  int dims() const { return dims_; }
  int channels() const { return channels_; }
  int stride() const { return stride_; }
  const Coord& extent() const { return extent_; }

  size_t size() const { return sites_->coords.size(); }
  bool empty() const { return size() == 0; }

  std::span<const Coord> coords() const { return sites_->coords; }
  const Coord& coord(size_t row) const { return sites_->coords[row]; }
  std::span<const float> features() const { return features_; }
  std::span<const float> row(size_t i) const {
    return {features_.data() + i * static_cast<size_t>(channels_),
            static_cast<size_t>(channels_)};
  }

  bool in_extent(const Coord& c) const;
  // Row of an active coordinate; nullopt for inactive or out-of-extent ones.
  std::optional<size_t> find(const Coord& c) const;
  bool contains(const Coord& c) const { return find(c).has_value(); }

  bool shares_sites_with(const SparseTensor& other) const {
    return sites_ == other.sites_;
  }

 private:
  struct Sites {
    std::vector<Coord> coords;
    std::unordered_map<uint64_t, uint32_t> index;
  };

  SparseTensor(int dims, int channels, int stride, Coord extent,
               std::shared_ptr<const Sites> sites, std::vector<float> features);

  static std::shared_ptr<const Sites> make_sites(std::vector<Coord> coords);
  static void check_geometry(int dims, int channels, int stride,
                             const Coord& extent);

  int dims_ = 3;
  int channels_ = 0;
  int stride_ = 1;
  Coord extent_ = {1, 1, 1};
  std::shared_ptr<const Sites> sites_;
  std::vector<float> features_;
};

// ceil(extent / 2) on every axis used by the tensor's dimensionality.
Coord halve_extent(const Coord& extent, int dims);

}  // namespace sparsedet

#endif  // SPARSEDET_SPARSE_TENSOR_H_
