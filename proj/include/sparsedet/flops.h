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

#ifndef SPARSEDET_FLOPS_H_
#define SPARSEDET_FLOPS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsedet/conv.h"
#include "sparsedet/sparse_tensor.h"

namespace sparsedet {

enum class FlopsGroup { kBackbone, kHead };

struct FlopsEntry {
  std::string layer;
  FlopsGroup group = FlopsGroup::kBackbone;
  uint64_t input_sites = 0;
  uint64_t output_sites = 0;
  uint64_t rulebook_pairs = 0;
  uint64_t macs = 0;
  uint64_t flops = 0;  // 2 * macs + bias adds
};

struct StageStats {
  int stage = 0;
  int stride = 1;
  uint64_t voxels = 0;
  uint64_t flops = 0;
};

struct FlopsReport {
  std::vector<FlopsEntry> entries;
  std::vector<StageStats> stages;

  void add(FlopsEntry entry) { entries.push_back(std::move(entry)); }
  uint64_t total(FlopsGroup group) const;
  uint64_t total() const;
};

// Cost of one layer given its actual input and output. Multiply-adds are
// rulebook pairs x C_in x C_out; FLOPs are 2 x multiply-adds plus one add per
// output channel and site for the bias.
FlopsEntry count_flops(const SparseTensor& in, const ConvLayer& layer,
                       const SparseTensor& out, std::string name = {},
                       FlopsGroup group = FlopsGroup::kBackbone);

// Cost of a submanifold layer evaluated only at `rows`.
FlopsEntry count_flops_at(const SparseTensor& in, const ConvLayer& layer,
                          std::span<const size_t> rows, std::string name = {},
                          FlopsGroup group = FlopsGroup::kHead);

// Fixed-width text table, one line per layer plus stage and group totals.
std::string format_report(const FlopsReport& report);

}  // namespace sparsedet

#endif  // SPARSEDET_FLOPS_H_
