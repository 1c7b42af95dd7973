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

#include "sparsedet/io/weight_file.h"

#include <algorithm>
#include <cstring>
#include <set>
#include <utility>

#include "sparsedet/io/binary.h"

namespace sparsedet::io {

namespace {
constexpr char kMagic[4] = {'S', 'V', 'X', 'W'};
constexpr uint8_t kDtypeF32 = 0;
}  // namespace

size_t NamedTensor::element_count() const {
  size_t n = 1;
  for (uint32_t d : shape) n *= d;
  return n;
}

const NamedTensor* WeightFile::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<uint8_t> encode_weights(const WeightFile& file) {
  std::set<std::string> names;
  size_t directory_bytes = 4 + 2 + 4;
  for (const auto& t : file.tensors) {
    if (t.name.empty() || t.name.size() > UINT16_MAX || t.shape.size() > UINT8_MAX) {
      fail(ErrorCode::kInvalidArgument, "bad tensor name or rank: '" + t.name + "'");
    }
    if (!names.insert(t.name).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate tensor " + t.name);
    }
    if (t.element_count() != t.data.size()) {
      fail(ErrorCode::kShapeMismatch, t.name + ": shape does not match data");
    }
    directory_bytes += 2 + t.name.size() + 1 + 1 + 4 * t.shape.size() + 8 + 8;
  }

  ByteWriter w;
  w.put_string(std::string(kMagic, 4));
  w.put<uint16_t>(file.version);
  w.put<uint32_t>(static_cast<uint32_t>(file.tensors.size()));
  uint64_t offset = directory_bytes;
  for (const auto& t : file.tensors) {
    w.put<uint16_t>(static_cast<uint16_t>(t.name.size()));
    w.put_string(t.name);
    w.put<uint8_t>(kDtypeF32);
    w.put<uint8_t>(static_cast<uint8_t>(t.shape.size()));
    for (uint32_t d : t.shape) w.put<uint32_t>(d);
    const uint64_t bytes = 4 * static_cast<uint64_t>(t.data.size());
    w.put<uint64_t>(offset);
    w.put<uint64_t>(bytes);
    offset += bytes;
  }
  for (const auto& t : file.tensors) {
    for (float v : t.data) w.put<float>(v);
  }
  return w.take();
}

WeightFile decode_weights(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "not an SVXW weight file");
  }
  ByteReader r(bytes);
  r.get_string(4);
  WeightFile file;
  file.version = r.get<uint16_t>();
  if (file.version != kWeightFormatVersion) {
    fail(ErrorCode::kVersionUnsupported,
         "weight format version " + std::to_string(file.version));
  }
  const uint32_t count = r.get<uint32_t>();

  struct Range {
    uint64_t begin, end;
  };
  std::vector<Range> ranges;
  std::vector<std::pair<uint64_t, uint64_t>> payload;
  std::set<std::string> names;
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const uint16_t len = r.get<uint16_t>();
    t.name = r.get_string(len);
    if (!names.insert(t.name).second) {
      fail(ErrorCode::kShapeMismatch, "duplicate tensor " + t.name);
    }
    const uint8_t dtype = r.get<uint8_t>();
    if (dtype != kDtypeF32) {
      fail(ErrorCode::kShapeMismatch, t.name + ": only f32 tensors are supported");
    }
    const uint8_t rank = r.get<uint8_t>();
    for (uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.get<uint32_t>());
    const uint64_t offset = r.get<uint64_t>();
    const uint64_t length = r.get<uint64_t>();
    if (length != 4 * static_cast<uint64_t>(t.element_count())) {
      fail(ErrorCode::kShapeMismatch, t.name + ": byte length does not match shape");
    }
    payload.emplace_back(offset, length);
    file.tensors.push_back(std::move(t));
  }

  const uint64_t directory_end = r.position();
  for (size_t i = 0; i < file.tensors.size(); ++i) {
    const auto [offset, length] = payload[i];
    if (offset < directory_end || offset > bytes.size() ||
        length > bytes.size() - offset) {
      fail(ErrorCode::kTruncated, file.tensors[i].name + ": payload outside file");
    }
    ranges.push_back({offset, offset + length});
    auto& data = file.tensors[i].data;
    data.resize(length / 4);
    if (length > 0) std::memcpy(data.data(), bytes.data() + offset, length);
  }
  std::sort(ranges.begin(), ranges.end(),
            [](const Range& a, const Range& b) { return a.begin < b.begin; });
  for (size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].begin < ranges[i - 1].end) {
      fail(ErrorCode::kShapeMismatch, "tensor payloads overlap");
    }
  }
  return file;
}

void write_weights(const std::filesystem::path& path, const WeightFile& file) {
  write_file(path, encode_weights(file));
}

WeightFile read_weights(const std::filesystem::path& path) {
  return decode_weights(read_file(path));
}

}  // namespace sparsedet::io
