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

#ifndef SPARSEDET_IO_FRAME_FILE_H_
#define SPARSEDET_IO_FRAME_FILE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparsedet/voxelizer.h"

namespace sparsedet::io {

// SVXP point-cloud frame, little-endian:
//   "SVXP" | u32 N | N x (f32 x, f32 y, f32 z, f32 intensity) | f64 timestamp
//   | u32 frame id
std::vector<uint8_t> encode_frame(const PointCloud& cloud);
PointCloud decode_frame(std::span<const uint8_t> bytes);

void write_frame(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_frame(const std::filesystem::path& path);

}  // namespace sparsedet::io

#endif  // SPARSEDET_IO_FRAME_FILE_H_
