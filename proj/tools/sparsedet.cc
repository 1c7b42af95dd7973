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

// Command-line entry points: infer, track, flops, eval, selftest,
// gen-weights and gen-scene. Exit code 0 on success, 1 on any failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsedet/errors.h"
#include "sparsedet/flops.h"
#include "sparsedet/io/binary.h"
#include "sparsedet/io/config_file.h"
#include "sparsedet/io/frame_file.h"
#include "sparsedet/io/json_io.h"
#include "sparsedet/io/model_io.h"
#include "sparsedet/metrics.h"
#include "sparsedet/model.h"
#include "sparsedet/parallel.h"
#include "sparsedet/scene.h"
#include "sparsedet/tracker.h"
#include "testing/criteria.h"

namespace fs = std::filesystem;

namespace sparsedet {
namespace {

ModelConfig config_or_default(const std::string& path) {
  return path.empty() ? ModelConfig{} : io::load_config(path);
}

// Files with `extension` directly inside `dir`, sorted by name.
std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) {
    fail(ErrorCode::kIoError, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// ---- infer ---------------------------------------------------------------
struct InferArgs {
  std::string config;
  std::string weights;
  std::string input;
  std::string output;
  int threads = 1;
};

void infer(const InferArgs& args) {
  const ModelConfig cfg = config_or_default(args.config);
  const ModelWeights w = io::load_weights(args.weights, cfg);
  set_worker_threads(args.threads);

  auto run_one = [&](const fs::path& in, const fs::path& out) {
    const PointCloud cloud = io::read_frame(in);
    const InferenceResult result = run_detector(cloud, cfg, w);
    if (result.empty_frame) warn(in.string() + ": no points inside the grid range");
    io::DetectionFrame frame{cloud.frame_id, cloud.timestamp, result.detections};
    io::write_text_file(out, io::detections_to_json(frame, cfg.head));
  };

  if (fs::is_directory(args.input)) {
    fs::create_directories(args.output);
    for (const fs::path& in : list_files(args.input, ".svxp")) {
      run_one(in, fs::path(args.output) / (in.stem().string() + ".json"));
    }
  } else {
    run_one(args.input, args.output);
  }
}

// ---- track ---------------------------------------------------------------
struct TrackArgs {
  std::string config;
  std::string dets;
  std::string output;
};

void track(const TrackArgs& args) {
  const ModelConfig cfg = config_or_default(args.config);
  Tracker tracker(cfg.tracker);
  std::vector<TrackOutput> all;
  for (const fs::path& file : list_files(args.dets, ".json")) {
    const io::DetectionFrame frame =
        io::detections_from_json(io::read_text_file(file), cfg);
    const auto out = tracker.step(frame.detections, frame.timestamp, frame.frame_id);
    all.insert(all.end(), out.begin(), out.end());
  }
  io::write_text_file(args.output, io::tracks_to_json(all, cfg.head));
}

// ---- flops ---------------------------------------------------------------
struct FlopsArgs {
  std::string config;
  std::string weights;
  std::string input;
  std::optional<double> prune_ratio;
};

void flops(const FlopsArgs& args) {
  ModelConfig cfg = config_or_default(args.config);
  const ModelWeights w = io::load_weights(args.weights, cfg);
  if (args.prune_ratio) cfg.backbone.prune_ratio = *args.prune_ratio;
  const InferenceResult result = run_detector(io::read_frame(args.input), cfg, w, true);
  std::cout << format_report(result.flops);
}

// ---- eval ----------------------------------------------------------------
struct EvalArgs {
  std::string config;
  std::string dets;
  std::string gt;
  std::string tracks;
  std::string output;
  double iou = 0.5;
};

void eval(const EvalArgs& args) {
  const ModelConfig cfg = config_or_default(args.config);
  std::vector<Detection> dets;
  for (const fs::path& file : list_files(args.dets, ".json")) {
    const auto frame = io::detections_from_json(io::read_text_file(file), cfg);
    dets.insert(dets.end(), frame.detections.begin(), frame.detections.end());
  }
  std::vector<GroundTruthBox> boxes;
  std::vector<GroundTruthObservation> observations;
  for (const auto& frame : io::ground_truth_from_json(io::read_text_file(args.gt), cfg.head)) {
    for (const auto& b : frame.boxes) {
      boxes.push_back(b);
      observations.push_back({b.frame_id, b.object_id, b.box.cls, {b.box.center[0], b.box.center[1]}});
    }
  }
  EvalReport report = match_and_score(dets, boxes, args.iou);
  if (!args.tracks.empty()) {
    const auto tracks = io::tracks_from_json(io::read_text_file(args.tracks), cfg.head);
    report.id_switches = count_id_switches(observations, tracks).id_switches;
  }
  const std::string json = io::eval_report_to_json(report, cfg.head);
  if (args.output.empty()) {
    std::cout << json;
  } else {
    io::write_text_file(args.output, json);
  }
}

// ---- selftest ------------------------------------------------------------
bool selftest(uint64_t seed, const std::vector<int>& only) {
  for (int id : only) {
    if (id < testing::kFirstCoreCriterion || id > testing::kLastCoreCriterion) {
      fail(ErrorCode::kInvalidArgument, "no criterion " + std::to_string(id) + " (valid: 1-9)");
    }
  }
  bool all_passed = true;
  for (int id = testing::kFirstCoreCriterion; id <= testing::kLastCoreCriterion; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto result = testing::run_criterion(id, seed);
    std::cout << testing::format_result(result) << std::endl;
    all_passed = all_passed && result.passed;
  }
  return all_passed;
}

// ---- gen-weights ---------------------------------------------------------
struct GenWeightsArgs {
  std::string config;
  uint64_t seed = 0;
  std::string output;
  bool with_norm = false;
};

void gen_weights(const GenWeightsArgs& args) {
  const ModelConfig cfg = config_or_default(args.config);
  io::WeightFile file = io::to_weight_file(random_model_weights(cfg, args.seed), cfg);
  if (args.with_norm) io::add_random_norm(file, args.seed + 1);
  io::write_weights(args.output, file);
}

// ---- gen-scene -----------------------------------------------------------
struct GenSceneArgs {
  std::string config;
  std::string spec;
  std::string output;
  std::string gt;
};

void gen_scene(const GenSceneArgs& args) {
  const ModelConfig cfg = config_or_default(args.config);
  const SceneSpec spec = io::scene_spec_from_json(io::read_text_file(args.spec), cfg.head);
  const std::vector<SceneFrame> frames = generate_scene(spec);
  // One frame goes to the named file; several go into a directory.
  if (frames.size() == 1 && fs::path(args.output).extension() == ".svxp") {
    io::write_frame(args.output, frames.front().cloud);
  } else {
    fs::create_directories(args.output);
    for (const SceneFrame& f : frames) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06u.svxp", f.cloud.frame_id);
      io::write_frame(fs::path(args.output) / name, f.cloud);
    }
  }
  if (!args.gt.empty()) {
    std::vector<io::GroundTruthFrame> gt;
    for (const SceneFrame& f : frames) gt.push_back({f.cloud.frame_id, f.cloud.timestamp, f.boxes});
    io::write_text_file(args.gt, io::ground_truth_to_json(gt, cfg.head));
  }
}

}  // namespace
}  // namespace sparsedet

int main(int argc, char** argv) {
  using namespace sparsedet;
  CLI::App app{"Fully sparse voxel 3D detector and tracker"};
  app.require_subcommand(1);

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "detect boxes in one frame or a directory of frames");
  infer_cmd->add_option("--config", infer_args.config, "config file (defaults when omitted)");
  infer_cmd->add_option("--weights", infer_args.weights, "SVXW weight file")->required();
  infer_cmd->add_option("--input", infer_args.input, "SVXP frame or directory")->required();
  infer_cmd->add_option("--output", infer_args.output, "detection JSON or directory")->required();
  infer_cmd->add_option("--threads", infer_args.threads, "worker threads")
      ->check(CLI::Range(1, 256));

  TrackArgs track_args;
  auto* track_cmd = app.add_subcommand("track", "link per-frame detections into tracks");
  track_cmd->add_option("--config", track_args.config, "config file");
  track_cmd->add_option("--dets", track_args.dets, "directory of detection JSON files")->required();
  track_cmd->add_option("--output", track_args.output, "track JSON")->required();

  FlopsArgs flops_args;
  auto* flops_cmd = app.add_subcommand("flops", "print the per-layer and per-stage FLOPs table");
  flops_cmd->add_option("--config", flops_args.config, "config file");
  flops_cmd->add_option("--weights", flops_args.weights, "SVXW weight file")->required();
  flops_cmd->add_option("--input", flops_args.input, "SVXP frame")->required();
  flops_cmd->add_option("--prune-ratio", flops_args.prune_ratio, "override backbone prune_ratio");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score detections (and tracks) against ground truth");
  eval_cmd->add_option("--config", eval_args.config, "config file");
  eval_cmd->add_option("--dets", eval_args.dets, "directory of detection JSON files")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "ground-truth JSON")->required();
  eval_cmd->add_option("--tracks", eval_args.tracks, "track JSON, enables id switch counting");
  eval_cmd->add_option("--iou", eval_args.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--output", eval_args.output, "report JSON (stdout when omitted)");

  uint64_t selftest_seed = 2024;
  std::vector<int> selftest_only;
  auto* selftest_cmd = app.add_subcommand("selftest", "run the oracle property suite");
  selftest_cmd->add_option("--seed", selftest_seed, "random seed");
  selftest_cmd->add_option("--criterion", selftest_only, "run only these criteria (1-9)");

  GenWeightsArgs weights_args;
  auto* weights_cmd = app.add_subcommand("gen-weights", "write deterministic random weights");
  weights_cmd->add_option("--config", weights_args.config, "config file");
  weights_cmd->add_option("--seed", weights_args.seed, "random seed");
  weights_cmd->add_option("--output", weights_args.output, "SVXW output")->required();
  weights_cmd->add_flag("--with-norm", weights_args.with_norm,
                        "also emit normalization tensors (folded on load)");

  GenSceneArgs scene_args;
  auto* scene_cmd = app.add_subcommand("gen-scene", "synthesize frames from box descriptions");
  scene_cmd->add_option("--config", scene_args.config, "config file (class names)");
  scene_cmd->add_option("--spec", scene_args.spec, "scene JSON")->required();
  scene_cmd->add_option("--output", scene_args.output,
                        "SVXP file for one frame, otherwise a directory")
      ->required();
  scene_cmd->add_option("--gt", scene_args.gt, "ground-truth JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*infer_cmd) infer(infer_args);
    if (*track_cmd) track(track_args);
    if (*flops_cmd) flops(flops_args);
    if (*eval_cmd) eval(eval_args);
    if (*selftest_cmd) return selftest(selftest_seed, selftest_only) ? 0 : 1;
    if (*weights_cmd) gen_weights(weights_args);
    if (*scene_cmd) gen_scene(scene_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
