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

#include "sparsedet/flops.h"

#include <cstdio>

namespace sparsedet {

namespace {

FlopsEntry make_entry(std::string name, FlopsGroup group, uint64_t in_sites,
                      uint64_t out_sites, uint64_t pairs, const ConvLayer& layer) {
  FlopsEntry e;
  e.layer = std::move(name);
  e.group = group;
  e.input_sites = in_sites;
  e.output_sites = out_sites;
  e.rulebook_pairs = pairs;
  e.macs = pairs * static_cast<uint64_t>(layer.in_channels) *
           static_cast<uint64_t>(layer.out_channels);
  e.flops = 2 * e.macs + static_cast<uint64_t>(layer.out_channels) * out_sites;
  return e;
}

}  // namespace

uint64_t FlopsReport::total(FlopsGroup group) const {
  uint64_t sum = 0;
  for (const auto& e : entries) {
    if (e.group == group) sum += e.flops;
  }
  return sum;
}

uint64_t FlopsReport::total() const {
  uint64_t sum = 0;
  for (const auto& e : entries) sum += e.flops;
  return sum;
}

FlopsEntry count_flops(const SparseTensor& in, const ConvLayer& layer,
                       const SparseTensor& out, std::string name,
                       FlopsGroup group) {
  if (in.empty()) return make_entry(std::move(name), group, 0, 0, 0, layer);
  const Rulebook rules = layer.mode == ConvMode::kSubmanifold
                             ? submanifold_rulebook(in, layer.kernel_size)
                             : strided_rulebook(in, layer, out);
  return make_entry(std::move(name), group, in.size(), out.size(),
                    rules.num_pairs(), layer);
}

FlopsEntry count_flops_at(const SparseTensor& in, const ConvLayer& layer,
                          std::span<const size_t> rows, std::string name,
                          FlopsGroup group) {
  const Rulebook rules = submanifold_rulebook_at(in, layer.kernel_size, rows);
  return make_entry(std::move(name), group, in.size(), rows.size(),
                    rules.num_pairs(), layer);
}

std::string format_report(const FlopsReport& report) {
  std::string out;
  char line[192];
  std::snprintf(line, sizeof(line), "%-28s %-8s %10s %10s %12s %16s\n", "layer",
                "group", "in_sites", "out_sites", "pairs", "flops");
  out += line;
  for (const auto& e : report.entries) {
    std::snprintf(line, sizeof(line), "%-28s %-8s %10llu %10llu %12llu %16llu\n",
                  e.layer.c_str(),
                  e.group == FlopsGroup::kBackbone ? "backbone" : "head",
                  static_cast<unsigned long long>(e.input_sites),
                  static_cast<unsigned long long>(e.output_sites),
                  static_cast<unsigned long long>(e.rulebook_pairs),
                  static_cast<unsigned long long>(e.flops));
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof(line), "%-8s %8s %12s %16s\n", "stage", "stride",
                "voxels", "flops");
  out += line;
  for (const auto& s : report.stages) {
    std::snprintf(line, sizeof(line), "%-8d %8d %12llu %16llu\n", s.stage,
                  s.stride, static_cast<unsigned long long>(s.voxels),
                  static_cast<unsigned long long>(s.flops));
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof(line),
                "total backbone %llu\ntotal head %llu\ntotal %llu\n",
                static_cast<unsigned long long>(report.total(FlopsGroup::kBackbone)),
                static_cast<unsigned long long>(report.total(FlopsGroup::kHead)),
                static_cast<unsigned long long>(report.total()));
  out += line;
  return out;
}

}  // namespace sparsedet
