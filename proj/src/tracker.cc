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

#include "sparsedet/tracker.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "sparsedet/errors.h"

namespace sparsedet {

namespace {

double distance(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

struct Candidate {
  double dist;
  size_t det;
  size_t track;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  return std::tie(a.dist, a.det, a.track) < std::tie(b.dist, b.det, b.track);
}

}  // namespace

double AssociationConfig::center_gate_for(int cls) const {
  if (center_gate.size() == 1) return center_gate[0];
  if (cls < 0 || cls >= static_cast<int>(center_gate.size())) {
    fail(ErrorCode::kInvalidArgument, "no center gate for class " + std::to_string(cls));
  }
  return center_gate[cls];
}

void AssociationConfig::validate() const {
  if (center_gate.empty()) fail(ErrorCode::kInvalidArgument, "center_gate is empty");
  for (double g : center_gate) {
    if (!(g > 0.0)) fail(ErrorCode::kInvalidArgument, "center gates must be > 0");
  }
  if (!(voxel_gate > 0.0)) fail(ErrorCode::kInvalidArgument, "voxel_gate must be > 0");
  if (max_age < 0) fail(ErrorCode::kInvalidArgument, "max_age must be >= 0");
  if (min_hits < 1) fail(ErrorCode::kInvalidArgument, "min_hits must be >= 1");
}

Matching associate(std::span<const Track> tracks,
                   std::span<const Detection> detections, double dt,
                   const AssociationConfig& cfg) {
  cfg.validate();
  if (!(dt > 0.0)) fail(ErrorCode::kInvalidArgument, "dt must be positive");

  std::vector<bool> track_used(tracks.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  for (size_t t = 0; t < tracks.size(); ++t) {
    if (tracks[t].state == TrackState::kDead) track_used[t] = true;
  }

  Matching out;
  auto greedy = [&](std::vector<Candidate> candidates, MatchPass pass) {
    std::sort(candidates.begin(), candidates.end(), candidate_less);
    for (const Candidate& c : candidates) {
      if (track_used[c.track] || det_used[c.det]) continue;
      track_used[c.track] = true;
      det_used[c.det] = true;
      out.matches.push_back({c.track, c.det, c.dist, pass});
    }
  };

  std::vector<Candidate> centers;
  for (size_t d = 0; d < detections.size(); ++d) {
    const Detection& det = detections[d];
    const double gate = cfg.center_gate_for(det.box.cls);
    for (size_t t = 0; t < tracks.size(); ++t) {
      const Track& trk = tracks[t];
      if (track_used[t] || trk.cls != det.box.cls) continue;
      const std::array<double, 2> predicted = {trk.center[0] + trk.velocity[0] * dt,
                                               trk.center[1] + trk.velocity[1] * dt};
      const double dist = distance(predicted, {det.box.center[0], det.box.center[1]});
      if (dist <= gate) centers.push_back({dist, d, t});
    }
  }
  greedy(std::move(centers), MatchPass::kCenter);

  if (cfg.voxel_association) {
    std::vector<Candidate> voxels;
    for (size_t d = 0; d < detections.size(); ++d) {
      if (det_used[d]) continue;
      for (size_t t = 0; t < tracks.size(); ++t) {
        if (track_used[t] || tracks[t].cls != detections[d].box.cls) continue;
        const double dist = distance(tracks[t].query_position,
                                     detections[d].query_position);
        if (dist <= cfg.voxel_gate) voxels.push_back({dist, d, t});
      }
    }
    greedy(std::move(voxels), MatchPass::kVoxel);
  }

  for (size_t t = 0; t < tracks.size(); ++t) {
    if (!track_used[t]) out.unmatched_tracks.push_back(t);
  }
  for (size_t d = 0; d < detections.size(); ++d) {
    if (!det_used[d]) out.unmatched_detections.push_back(d);
  }
  return out;
}

Tracker::Tracker(AssociationConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<TrackOutput> Tracker::step(std::span<const Detection> detections,
                                       double timestamp, uint32_t frame_id) {
  if (last_timestamp_ && !(timestamp > *last_timestamp_)) {
    fail(ErrorCode::kNonMonotoneTimestamp,
         "timestamp " + std::to_string(timestamp) + " does not follow " +
             std::to_string(*last_timestamp_));
  }
  const double dt = last_timestamp_ ? timestamp - *last_timestamp_ : 1.0;
  last_timestamp_ = timestamp;

  std::vector<size_t> active;
  std::vector<Track> snapshot;
  for (size_t i = 0; i < tracks_.size(); ++i) {
    if (tracks_[i].state == TrackState::kActive) {
      active.push_back(i);
      snapshot.push_back(tracks_[i]);
    }
  }
  const Matching m = associate(snapshot, detections, dt, cfg_);

  for (const Match& match : m.matches) {
    Track& trk = tracks_[active[match.track]];
    const Detection& det = detections[match.detection];
    const std::array<double, 2> center = {det.box.center[0], det.box.center[1]};
    if (det.has_velocity) {
      trk.velocity = det.box.velocity;
    } else {
      trk.velocity = {(center[0] - trk.center[0]) / dt, (center[1] - trk.center[1]) / dt};
    }
    trk.center = center;
    trk.query_position = det.query_position;
    trk.age = 0;
    ++trk.hits;
  }
  for (size_t t : m.unmatched_tracks) {
    Track& trk = tracks_[active[t]];
    if (++trk.age > cfg_.max_age) trk.state = TrackState::kDead;
  }
  for (size_t d : m.unmatched_detections) {
    const Detection& det = detections[d];
    Track trk;
    trk.id = next_id_++;
    trk.cls = det.box.cls;
    trk.center = {det.box.center[0], det.box.center[1]};
    if (det.has_velocity) trk.velocity = det.box.velocity;
    trk.query_position = det.query_position;
    trk.hits = 1;
    tracks_.push_back(trk);
  }

  std::vector<TrackOutput> out;
  for (const Track& trk : tracks_) {
    if (trk.state == TrackState::kActive && trk.age == 0 && trk.hits >= cfg_.min_hits) {
      out.push_back({frame_id, trk.id, trk.cls, trk.center, trk.velocity});
    }
  }
  return out;
}

IdSwitchStats count_id_switches(std::span<const GroundTruthObservation> gt,
                                std::span<const TrackOutput> tracks,
                                double match_distance) {
  std::map<uint32_t, std::vector<size_t>> gt_by_frame;
  std::map<uint32_t, std::vector<size_t>> tracks_by_frame;
  for (size_t i = 0; i < gt.size(); ++i) gt_by_frame[gt[i].frame_id].push_back(i);
  for (size_t i = 0; i < tracks.size(); ++i) {
    tracks_by_frame[tracks[i].frame_id].push_back(i);
  }

  IdSwitchStats stats;
  std::map<int64_t, int64_t> last_id;
  for (const auto& [frame, gts] : gt_by_frame) {
    const auto it = tracks_by_frame.find(frame);
    const std::vector<size_t> empty;
    const std::vector<size_t>& outs = it == tracks_by_frame.end() ? empty : it->second;

    std::vector<Candidate> candidates;  // det := gt slot, track := output slot
    for (size_t g = 0; g < gts.size(); ++g) {
      for (size_t o = 0; o < outs.size(); ++o) {
        const auto& obs = gt[gts[g]];
        const auto& trk = tracks[outs[o]];
        if (obs.cls != trk.cls) continue;
        const double dist = distance(obs.center, trk.center);
        if (dist <= match_distance) candidates.push_back({dist, g, o});
      }
    }
    std::sort(candidates.begin(), candidates.end(), candidate_less);
    std::vector<bool> gt_used(gts.size(), false);
    std::vector<bool> out_used(outs.size(), false);
    for (const Candidate& c : candidates) {
      if (gt_used[c.det] || out_used[c.track]) continue;
      gt_used[c.det] = true;
      out_used[c.track] = true;
      const int64_t object = gt[gts[c.det]].object_id;
      const int64_t id = tracks[outs[c.track]].id;
      auto prev = last_id.find(object);
      if (prev != last_id.end() && prev->second != id) ++stats.id_switches;
      last_id[object] = id;
    }
    for (bool used : gt_used) {
      if (!used) ++stats.misses;
    }
  }
  return stats;
}

}  // namespace sparsedet
