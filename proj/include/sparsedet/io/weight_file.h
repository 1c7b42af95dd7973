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

#ifndef SPARSEDET_IO_WEIGHT_FILE_H_
#define SPARSEDET_IO_WEIGHT_FILE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sparsedet::io {

inline constexpr uint16_t kWeightFormatVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> shape;
  std::vector<float> data;

  size_t element_count() const;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// SVXW container, little-endian:
//   "SVXW" | u16 version | u32 count
//   | count x (u16 name length | name | u8 dtype (0 = f32) | u8 rank
//              | rank x u32 dim | u64 byte offset | u64 byte length)
//   | payload
// Offsets are absolute and payload ranges may not overlap.
struct WeightFile {
  uint16_t version = kWeightFormatVersion;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  friend bool operator==(const WeightFile&, const WeightFile&) = default;
};

std::vector<uint8_t> encode_weights(const WeightFile& file);
// Throws kBadMagic, kVersionUnsupported, kTruncated or kShapeMismatch.
WeightFile decode_weights(std::span<const uint8_t> bytes);

void write_weights(const std::filesystem::path& path, const WeightFile& file);
WeightFile read_weights(const std::filesystem::path& path);

}  // namespace sparsedet::io

#endif  // SPARSEDET_IO_WEIGHT_FILE_H_
