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

#include "sparsedet/io/json_io.h"

#include <json.hpp>

#include "sparsedet/errors.h"
#include "sparsedet/head.h"

namespace sparsedet::io {

namespace {

using nlohmann::json;

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("invalid JSON: ") + e.what());
  }
}

// Runs `fn`, turning nlohmann type and key errors into kParseError.
template <typename Fn>
auto guarded(const char* what, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
}

int class_of(const json& j, const HeadConfig& head) {
  const std::string name = j.at("class").get<std::string>();
  const int cls = head.class_index(name);
  if (cls < 0) fail(ErrorCode::kParseError, "unknown class '" + name + "'");
  return cls;
}

template <size_t N>
std::array<double, N> array_of(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != N) {
    fail(ErrorCode::kParseError,
         std::string("'") + key + "' needs " + std::to_string(N) + " values");
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json box_fields(const Box3D& box, const HeadConfig& head) {
  json j;
  j["class"] = head.class_name(box.cls);
  j["center"] = box.center;
  j["size"] = box.size;
  j["yaw"] = box.yaw;
  j["velocity"] = box.velocity;
  return j;
}

Box3D box_from(const json& j, const HeadConfig& head) {
  Box3D box;
  box.cls = class_of(j, head);
  box.center = array_of<3>(j, "center");
  box.size = array_of<3>(j, "size");
  box.yaw = j.value("yaw", 0.0);
  if (j.contains("velocity")) box.velocity = array_of<2>(j, "velocity");
  return box;
}

}  // namespace

std::string detections_to_json(const DetectionFrame& frame, const HeadConfig& head) {
  json dets = json::array();
  for (const Detection& d : frame.detections) {
    json j;
    j["frame_id"] = d.frame_id;
    j["class"] = head.class_name(d.box.cls);
    j["score"] = d.score;
    j["center"] = d.box.center;
    j["size"] = d.box.size;
    j["yaw"] = d.box.yaw;
    if (d.has_velocity) j["velocity"] = d.box.velocity;
    j["query_voxel"] = {d.query_voxel[0], d.query_voxel[1]};
    dets.push_back(std::move(j));
  }
  json root;
  root["frame_id"] = frame.frame_id;
  root["timestamp"] = frame.timestamp;
  root["detections"] = std::move(dets);
  return dump(root);
}

DetectionFrame detections_from_json(const std::string& text, const ModelConfig& cfg) {
  const json root = parse(text);
  return guarded("detection file", [&] {
    DetectionFrame frame;
    frame.frame_id = root.at("frame_id").get<uint32_t>();
    frame.timestamp = root.at("timestamp").get<double>();
    for (const json& j : root.at("detections")) {
      Detection d;
      d.box = box_from(j, cfg.head);
      d.score = j.at("score").get<double>();
      d.frame_id = j.value("frame_id", frame.frame_id);
      d.has_velocity = j.contains("velocity");
      const auto qv = j.at("query_voxel").get<std::vector<int32_t>>();
      if (qv.size() != 2) fail(ErrorCode::kParseError, "query_voxel needs 2 values");
      d.query_voxel = {qv[0], qv[1], 0};
      d.query_position = voxel_center(d.query_voxel, cfg.grid, 8);
      frame.detections.push_back(d);
    }
    return frame;
  });
}

std::string tracks_to_json(std::span<const TrackOutput> tracks, const HeadConfig& head) {
  json arr = json::array();
  for (const TrackOutput& t : tracks) {
    json j;
    j["frame_id"] = t.frame_id;
    j["id"] = t.id;
    j["class"] = head.class_name(t.cls);
    j["center"] = t.center;
    j["velocity"] = t.velocity;
    arr.push_back(std::move(j));
  }
  json root;
  root["tracks"] = std::move(arr);
  return dump(root);
}

std::vector<TrackOutput> tracks_from_json(const std::string& text, const HeadConfig& head) {
  const json root = parse(text);
  return guarded("track file", [&] {
    std::vector<TrackOutput> out;
    for (const json& j : root.at("tracks")) {
      TrackOutput t;
      t.frame_id = j.at("frame_id").get<uint32_t>();
      t.id = j.at("id").get<int64_t>();
      t.cls = class_of(j, head);
      t.center = array_of<2>(j, "center");
      t.velocity = array_of<2>(j, "velocity");
      out.push_back(t);
    }
    return out;
  });
}

std::string ground_truth_to_json(std::span<const GroundTruthFrame> frames,
                                 const HeadConfig& head) {
  json arr = json::array();
  for (const GroundTruthFrame& f : frames) {
    json boxes = json::array();
    for (const GroundTruthBox& b : f.boxes) {
      json j = box_fields(b.box, head);
      j["object_id"] = b.object_id;
      boxes.push_back(std::move(j));
    }
    json jf;
    jf["frame_id"] = f.frame_id;
    jf["timestamp"] = f.timestamp;
    jf["boxes"] = std::move(boxes);
    arr.push_back(std::move(jf));
  }
  json root;
  root["frames"] = std::move(arr);
  return dump(root);
}

std::vector<GroundTruthFrame> ground_truth_from_json(const std::string& text,
                                                     const HeadConfig& head) {
  const json root = parse(text);
  return guarded("ground-truth file", [&] {
    std::vector<GroundTruthFrame> frames;
    for (const json& jf : root.at("frames")) {
      GroundTruthFrame f;
      f.frame_id = jf.at("frame_id").get<uint32_t>();
      f.timestamp = jf.value("timestamp", 0.0);
      for (const json& j : jf.at("boxes")) {
        GroundTruthBox b;
        b.box = box_from(j, head);
        b.frame_id = f.frame_id;
        b.object_id = j.value("object_id", int64_t{-1});
        f.boxes.push_back(b);
      }
      frames.push_back(std::move(f));
    }
    return frames;
  });
}

std::string eval_report_to_json(const EvalReport& report, const HeadConfig& head) {
  json classes = json::object();
  for (const auto& [cls, s] : report.per_class) {
    json j;
    j["true_positives"] = s.true_positives;
    j["false_positives"] = s.false_positives;
    j["false_negatives"] = s.false_negatives;
    j["num_gt"] = s.num_gt;
    j["num_detections"] = s.num_detections;
    j["precision"] = s.precision;
    j["recall"] = s.recall;
    classes[head.class_name(cls)] = std::move(j);
  }
  json root;
  root["iou_threshold"] = report.iou_threshold;
  root["per_class"] = std::move(classes);
  root["mean_precision"] = report.mean_precision;
  root["mean_recall"] = report.mean_recall;
  if (report.id_switches) root["id_switches"] = *report.id_switches;
  return dump(root);
}

SceneSpec scene_spec_from_json(const std::string& text, const HeadConfig& head) {
  const json root = parse(text);
  return guarded("scene spec", [&] {
    SceneSpec spec;
    spec.seed = root.value("seed", spec.seed);
    spec.num_frames = root.value("num_frames", spec.num_frames);
    spec.dt = root.value("dt", spec.dt);
    spec.start_time = root.value("start_time", spec.start_time);
    spec.start_frame = root.value("start_frame", spec.start_frame);
    spec.surface_density = root.value("surface_density", spec.surface_density);
    if (root.contains("ground")) {
      const json& g = root.at("ground");
      spec.ground = true;
      spec.ground_z = g.value("z", spec.ground_z);
      spec.ground_half_size = g.value("half_size", spec.ground_half_size);
      spec.ground_density = g.value("density", spec.ground_density);
    }
    int64_t next_id = 1;
    for (const json& j : root.at("objects")) {
      SceneObject obj;
      obj.box = box_from(j, head);
      obj.id = j.value("id", next_id);
      next_id = obj.id + 1;
      spec.objects.push_back(obj);
    }
    spec.validate();
    return spec;
  });
}

}  // namespace sparsedet::io
