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

#ifndef SPARSEDET_IO_MODEL_IO_H_
#define SPARSEDET_IO_MODEL_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "sparsedet/io/weight_file.h"
#include "sparsedet/model.h"

namespace sparsedet::io {

// Batch-norm epsilon used when folding `<layer>.norm.*` tensors.
inline constexpr double kNormEpsilon = 1e-3;

// Tensor names, in file order:
//   backbone.stem.{weight,bias}
//   backbone.stage<s>.down.{weight,bias}              s = 2..6
//   backbone.stage<s>.block<b>.conv<1|2>.{weight,bias}
//   head.group<g>.{cls,reg}.{weight,bias}
// Weight shape is {K,K,K,Cin,Cout} (3D) or {K,K,Cin,Cout} (2D); bias is {Cout}.
// Any layer may also carry norm.{gamma,beta,mean,var}, each {Cout}, which
// are folded into the layer when loading.
std::vector<std::string> expected_layer_names(const ModelConfig& cfg);

WeightFile to_weight_file(const ModelWeights& w, const ModelConfig& cfg);

// Throws kMissingTensor, kUnknownTensor or kShapeMismatch.
ModelWeights from_weight_file(const WeightFile& file, const ModelConfig& cfg);

ModelWeights load_weights(const std::filesystem::path& path, const ModelConfig& cfg);
void save_weights(const std::filesystem::path& path, const ModelWeights& w,
                  const ModelConfig& cfg);

// Adds random normalization statistics to every layer of `file`; loading the
// result folds them.
void add_random_norm(WeightFile& file, uint64_t seed);

}  // namespace sparsedet::io

#endif  // SPARSEDET_IO_MODEL_IO_H_
