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

#include "sparsedet/io/frame_file.h"

#include <string>

#include "sparsedet/io/binary.h"

namespace sparsedet::io {

namespace {
constexpr char kMagic[4] = {'S', 'V', 'X', 'P'};
constexpr size_t kHeaderBytes = 8;
constexpr size_t kTrailerBytes = 12;
constexpr size_t kPointBytes = 16;
}  // namespace

std::vector<uint8_t> encode_frame(const PointCloud& cloud) {
  if (cloud.points.size() > UINT32_MAX) {
    fail(ErrorCode::kInvalidArgument, "too many points for one frame");
  }
  ByteWriter w;
  w.put_string(std::string(kMagic, 4));
  w.put<uint32_t>(static_cast<uint32_t>(cloud.points.size()));
  for (const Point& p : cloud.points) {
    w.put<float>(p.x);
    w.put<float>(p.y);
    w.put<float>(p.z);
    w.put<float>(p.intensity);
  }
  w.put<double>(cloud.timestamp);
  w.put<uint32_t>(cloud.frame_id);
  return w.take();
}

PointCloud decode_frame(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::string(bytes.begin(), bytes.begin() + 4) !=
                              std::string(kMagic, 4)) {
    fail(ErrorCode::kBadMagic, "not an SVXP frame");
  }
  ByteReader r(bytes);
  r.get_string(4);
  const uint32_t n = r.get<uint32_t>();
  const size_t expected = kHeaderBytes + kPointBytes * size_t{n} + kTrailerBytes;
  if (bytes.size() < expected) {
    fail(ErrorCode::kTruncated, "frame holds " + std::to_string(bytes.size()) +
                                    " bytes, header implies " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    fail(ErrorCode::kShapeMismatch, "trailing bytes after frame payload");
  }
  PointCloud cloud;
  cloud.points.resize(n);
  for (Point& p : cloud.points) {
    p.x = r.get<float>();
    p.y = r.get<float>();
    p.z = r.get<float>();
    p.intensity = r.get<float>();
  }
  cloud.timestamp = r.get<double>();
  cloud.frame_id = r.get<uint32_t>();
  return cloud;
}

void write_frame(const std::filesystem::path& path, const PointCloud& cloud) {
  write_file(path, encode_frame(cloud));
}

PointCloud read_frame(const std::filesystem::path& path) {
  return decode_frame(read_file(path));
}

}  // namespace sparsedet::io
