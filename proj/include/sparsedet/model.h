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

#ifndef SPARSEDET_MODEL_H_
#define SPARSEDET_MODEL_H_

#include <cstddef>
#include <vector>

#include "sparsedet/backbone.h"
#include "sparsedet/boxes.h"
#include "sparsedet/flops.h"
#include "sparsedet/head.h"
#include "sparsedet/tracker.h"
#include "sparsedet/voxelizer.h"

namespace sparsedet {

struct ModelConfig {
  GridConfig grid;
  BackboneConfig backbone;
  HeadConfig head;
  AssociationConfig tracker;

  // Also checks that the head consumes the backbone's output width.
  void validate() const;
};

struct ModelWeights {
  BackboneWeights backbone;
  HeadWeights head;
};

ModelWeights random_model_weights(const ModelConfig& cfg, uint64_t seed);

struct InferenceResult {
  std::vector<Detection> detections;
  FlopsReport flops;  // filled when profiling
  size_t input_voxels = 0;
  size_t head_sites = 0;
  bool empty_frame = false;
};

// Voxelize -> backbone -> sparse head -> decoded boxes for one frame.
InferenceResult run_detector(const PointCloud& cloud, const ModelConfig& cfg,
                             const ModelWeights& w, bool profile = false);

}  // namespace sparsedet

#endif  // SPARSEDET_MODEL_H_
