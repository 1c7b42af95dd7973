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

#ifndef SPARSEDET_TRACKER_H_
#define SPARSEDET_TRACKER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sparsedet/boxes.h"

namespace sparsedet {

struct AssociationConfig {
  // Center gate in meters, one per class; a single entry applies to all.
  std::vector<double> center_gate = {2.0};
  double voxel_gate = 1.0;
  int max_age = 3;
  int min_hits = 1;
  // Second matching pass on query-voxel positions.
  bool voxel_association = true;

  double center_gate_for(int cls) const;
  void validate() const;
};

enum class TrackState { kActive, kDead };

struct Track {
  int64_t id = 0;
  int cls = 0;
  std::array<double, 2> center = {0.0, 0.0};
  std::array<double, 2> velocity = {0.0, 0.0};
  std::array<double, 2> query_position = {0.0, 0.0};
  int age = 0;  // frames since the last update
  int hits = 0;
  TrackState state = TrackState::kActive;
};

enum class MatchPass { kCenter, kVoxel };

struct Match {
  size_t track = 0;
  size_t detection = 0;
  double distance = 0.0;
  MatchPass pass = MatchPass::kCenter;
};

struct Matching {
  std::vector<Match> matches;
  std::vector<size_t> unmatched_tracks;
  std::vector<size_t> unmatched_detections;
};

// Two greedy passes within each class. Pass 1 compares the constant-velocity
// prediction of every track with detection centers; pass 2 compares the
// last query-voxel position with each remaining detection's query voxel.
// Candidates are taken in ascending distance, ties by detection index then
// track index.
Matching associate(std::span<const Track> tracks,
                   std::span<const Detection> detections, double dt,
                   const AssociationConfig& cfg);

struct TrackOutput {
  uint32_t frame_id = 0;
  int64_t id = 0;
  int cls = 0;
  std::array<double, 2> center = {0.0, 0.0};
  std::array<double, 2> velocity = {0.0, 0.0};
};

// Frame-sequential tracker. Matched tracks take the detection's regressed
// velocity, or a finite difference of centers when it has none.
class Tracker {
 public:
  explicit Tracker(AssociationConfig cfg);

  // Throws kNonMonotoneTimestamp unless timestamps strictly increase.
  // Returns confirmed tracks updated in this frame, ordered by id.
  std::vector<TrackOutput> step(std::span<const Detection> detections,
                                double timestamp, uint32_t frame_id);

  // Every track ever created, dead ones included.
  const std::vector<Track>& tracks() const { return tracks_; }
  const AssociationConfig& config() const { return cfg_; }

 private:
  AssociationConfig cfg_;
  std::vector<Track> tracks_;
  int64_t next_id_ = 1;
  std::optional<double> last_timestamp_;
};

struct GroundTruthObservation {
  uint32_t frame_id = 0;
  int64_t object_id = 0;
  int cls = 0;
  std::array<double, 2> center = {0.0, 0.0};
};

struct IdSwitchStats {
  int id_switches = 0;
  int misses = 0;  // ground-truth observations without a track
};

// Per frame, ground-truth objects are matched greedily to same-class output
// tracks within `match_distance` meters. An id switch is counted when an
// object's matched track id differs from the id it was last matched to.
IdSwitchStats count_id_switches(std::span<const GroundTruthObservation> gt,
                                std::span<const TrackOutput> tracks,
                                double match_distance = 2.0);

}  // namespace sparsedet

#endif  // SPARSEDET_TRACKER_H_
