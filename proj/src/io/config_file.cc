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

#include "sparsedet/io/config_file.h"

#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "sparsedet/errors.h"
#include "sparsedet/io/binary.h"

namespace sparsedet::io {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

class Reader {
 public:
  Reader(std::string section, Section entries)
      : section_(std::move(section)), entries_(std::move(entries)) {}

  ~Reader() = default;

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  template <typename T>
  void read(const std::string& key, T& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    out = parse<T>(it->second.value, key);
    entries_.erase(it);
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    out.clear();
    for (const auto& item : split_list(it->second.value, key)) {
      out.push_back(parse<T>(item, key));
    }
    entries_.erase(it);
  }

  template <typename T, size_t N>
  void read_array(const std::string& key, std::array<T, N>& out) {
    std::vector<T> v;
    read_list(key, v);
    if (v.empty()) return;
    if (v.size() != N) error(key, "expected " + std::to_string(N) + " values");
    std::copy(v.begin(), v.end(), out.begin());
  }

  void finish() const {
    if (!entries_.empty()) {
      const auto& [key, entry] = *entries_.begin();
      fail(ErrorCode::kParseError, "line " + std::to_string(entry.line) +
                                       ": unknown key '" + key + "' in [" +
                                       section_ + "]");
    }
  }

 private:
  [[noreturn]] void error(const std::string& key, const std::string& msg) const {
    fail(ErrorCode::kParseError, "[" + section_ + "] " + key + ": " + msg);
  }

  std::vector<std::string> split_list(const std::string& raw, const std::string& key) const {
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
      error(key, "expected a [list]");
    }
    std::vector<std::string> items;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) items.push_back(unquote(item));
    }
    return items;
  }

  template <typename T>
  T parse(const std::string& raw, const std::string& key) const {
    const std::string s = unquote(trim(raw));
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true") return true;
      if (s == "false") return false;
      error(key, "expected true or false, got '" + s + "'");
    } else {
      T value{};
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        error(key, "cannot parse '" + s + "'");
      }
      return value;
    }
  }

  std::string section_;
  Section entries_;
};

std::map<std::string, Section> split_sections(std::string_view text) {
  static const std::set<std::string> kSections = {"grid", "backbone", "head", "tracker"};
  std::map<std::string, Section> sections;
  std::string current;
  std::stringstream ss{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      current = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(current)) {
        fail(ErrorCode::kParseError, "line " + std::to_string(line_no) +
                                         ": unknown section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || current.empty()) {
      fail(ErrorCode::kParseError,
           "line " + std::to_string(line_no) + ": expected 'key = value' inside a section");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": empty key or value");
    }
    if (!sections[current].emplace(key, Entry{value, line_no}).second) {
      fail(ErrorCode::kParseError,
           "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return sections;
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename Range, typename Fn>
std::string fmt_list(const Range& values, Fn fn) {
  std::string out = "[";
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ", ";
    out += fn(v);
    first = false;
  }
  return out + "]";
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
  auto sections = split_sections(text);
  ModelConfig cfg;

  {
    Reader r("grid", sections["grid"]);
    r.read_array("range_min", cfg.grid.range_min);
    r.read_array("range_max", cfg.grid.range_max);
    r.read_array("voxel_size", cfg.grid.voxel_size);
    r.finish();
  }
  {
    Reader r("backbone", sections["backbone"]);
    r.read_list("channels", cfg.backbone.channels);
    r.read("blocks_per_stage", cfg.backbone.blocks_per_stage);
    r.read("prune_ratio", cfg.backbone.prune_ratio);
    if (r.has("prune_stages")) r.read_list("prune_stages", cfg.backbone.prune_stages);
    r.read("kernel_size", cfg.backbone.kernel_size);
    std::string mode = cfg.backbone.mode == BackboneMode::k3D ? "3d" : "2d";
    r.read("mode", mode);
    if (mode == "3d") {
      cfg.backbone.mode = BackboneMode::k3D;
    } else if (mode == "2d") {
      cfg.backbone.mode = BackboneMode::k2D;
    } else {
      fail(ErrorCode::kParseError, "[backbone] mode must be 3d or 2d");
    }
    std::string pruned = "center";
    r.read("pruned_voxels", pruned);
    if (pruned == "center") {
      cfg.backbone.pruned_policy = PrunedVoxelPolicy::kCenterOnly;
    } else if (pruned == "drop") {
      cfg.backbone.pruned_policy = PrunedVoxelPolicy::kDrop;
    } else {
      fail(ErrorCode::kParseError, "[backbone] pruned_voxels must be center or drop");
    }
    r.finish();
  }
  {
    Reader r("head", sections["head"]);
    const bool renamed = r.has("class_names");
    const bool regrouped = r.has("class_group");
    r.read_list("class_names", cfg.head.class_names);
    cfg.head.num_classes = static_cast<int>(cfg.head.class_names.size());
    if (renamed && !regrouped) {
      cfg.head.class_group.clear();
      for (int c = 0; c < cfg.head.num_classes; ++c) cfg.head.class_group.push_back(c);
    }
    r.read_list("class_group", cfg.head.class_group);
    if ((renamed || regrouped) && !r.has("maxpool_kernel")) {
      cfg.head.maxpool_kernel.assign(static_cast<size_t>(cfg.head.num_groups()), 3);
    }
    r.read_list("maxpool_kernel", cfg.head.maxpool_kernel);
    r.read("head_kernel", cfg.head.head_kernel);
    r.read("score_threshold", cfg.head.score_threshold);
    r.read("max_detections", cfg.head.max_detections);
    r.read("regress_velocity", cfg.head.regress_velocity);
    r.finish();
  }
  {
    Reader r("tracker", sections["tracker"]);
    r.read_list("center_gate", cfg.tracker.center_gate);
    r.read("voxel_gate", cfg.tracker.voxel_gate);
    r.read("max_age", cfg.tracker.max_age);
    r.read("min_hits", cfg.tracker.min_hits);
    r.read("voxel_association", cfg.tracker.voxel_association);
    r.finish();
  }
  if (cfg.backbone.channels.size() == kNumStages) {
    cfg.head.in_channels = cfg.backbone.channels[3];
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

std::string format_config(const ModelConfig& cfg) {
  auto num = [](auto v) { return std::to_string(v); };
  auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
  std::string out;
  out += "[grid]\n";
  out += "range_min = " + fmt_list(cfg.grid.range_min, fmt_double) + "\n";
  out += "range_max = " + fmt_list(cfg.grid.range_max, fmt_double) + "\n";
  out += "voxel_size = " + fmt_list(cfg.grid.voxel_size, fmt_double) + "\n";
  out += "\n[backbone]\n";
  out += "channels = " + fmt_list(cfg.backbone.channels, num) + "\n";
  out += "blocks_per_stage = " + num(cfg.backbone.blocks_per_stage) + "\n";
  out += "prune_ratio = " + fmt_double(cfg.backbone.prune_ratio) + "\n";
  out += "prune_stages = " + fmt_list(cfg.backbone.prune_stages, num) + "\n";
  out += "kernel_size = " + num(cfg.backbone.kernel_size) + "\n";
  out += std::string("mode = ") + (cfg.backbone.mode == BackboneMode::k3D ? "3d" : "2d") + "\n";
  out += std::string("pruned_voxels = ") +
         (cfg.backbone.pruned_policy == PrunedVoxelPolicy::kCenterOnly ? "center" : "drop") +
         "\n";
  out += "\n[head]\n";
  out += "class_names = " + fmt_list(cfg.head.class_names, quoted) + "\n";
  out += "class_group = " + fmt_list(cfg.head.class_group, num) + "\n";
  out += "maxpool_kernel = " + fmt_list(cfg.head.maxpool_kernel, num) + "\n";
  out += "head_kernel = " + num(cfg.head.head_kernel) + "\n";
  out += "score_threshold = " + fmt_double(cfg.head.score_threshold) + "\n";
  out += "max_detections = " + num(cfg.head.max_detections) + "\n";
  out += std::string("regress_velocity = ") + (cfg.head.regress_velocity ? "true" : "false") + "\n";
  out += "\n[tracker]\n";
  out += "center_gate = " + fmt_list(cfg.tracker.center_gate, fmt_double) + "\n";
  out += "voxel_gate = " + fmt_double(cfg.tracker.voxel_gate) + "\n";
  out += "max_age = " + num(cfg.tracker.max_age) + "\n";
  out += "min_hits = " + num(cfg.tracker.min_hits) + "\n";
  out += std::string("voxel_association = ") +
         (cfg.tracker.voxel_association ? "true" : "false") + "\n";
  return out;
}

}  // namespace sparsedet::io
