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

#ifndef SPARSEDET_IO_CONFIG_FILE_H_
#define SPARSEDET_IO_CONFIG_FILE_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "sparsedet/model.h"

namespace sparsedet::io {

// Flat sectioned key/value text:
//
//   # comment
//   [grid]
//   voxel_size = [0.075, 0.075, 0.2]
//   [backbone]
//   prune_ratio = 0.5
//
// Sections: grid, backbone, head, tracker. Missing keys keep their defaults;
// unknown sections or keys are rejected with kParseError.
ModelConfig parse_config(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);

// Emits every key; parse_config(format_config(c)) reproduces c.
std::string format_config(const ModelConfig& cfg);

}  // namespace sparsedet::io

#endif  // SPARSEDET_IO_CONFIG_FILE_H_
