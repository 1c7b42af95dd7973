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

#include "sparsedet/model.h"

#include <random>

#include "sparsedet/errors.h"
#include "sparsedet/pooling.h"

namespace sparsedet {

void ModelConfig::validate() const {
  grid.validate();
  backbone.validate();
  head.validate();
  tracker.validate();
  if (head.in_channels != backbone.out_channels()) {
    fail(ErrorCode::kChannelMismatch, "head input width must equal backbone output width");
  }
  if (backbone.mode == BackboneMode::k3D) {
    const Coord extent = grid.extent();
    if (extent[0] < 1 || extent[1] < 1) {
      fail(ErrorCode::kInvalidArgument, "grid has no cells");
    }
  }
}

ModelWeights random_model_weights(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelWeights w;
  w.backbone = random_backbone_weights(cfg.backbone, rng);
  w.head = random_head_weights(cfg.head, rng);
  return w;
}

InferenceResult run_detector(const PointCloud& cloud, const ModelConfig& cfg,
                             const ModelWeights& w, bool profile) {
  cfg.validate();
  InferenceResult result;
  const VoxelizeResult vox = voxelize(cloud, cfg.grid);
  result.input_voxels = vox.tensor.size();
  result.empty_frame = vox.empty_frame;

  const StageOutputs stages =
      run_stages(vox.tensor, w.backbone, cfg.backbone, profile ? &result.flops : nullptr);
  SparseTensor merged =
      merge_multistride(stages.features[3], stages.features[4], stages.features[5]);
  const SparseTensor features = merged.dims() == 3 ? height_compress(merged) : merged;
  result.head_sites = features.size();

  const SparseTensor scores = classify_voxels(features, cfg.head, w.head);
  const std::vector<QueryVoxel> selected = select_query_voxels(scores, cfg.head);
  const std::vector<RegressionOutput> regs =
      regress_boxes(features, selected, cfg.head, w.head);
  result.detections = decode_boxes(selected, regs, cfg.grid, features.stride());
  for (Detection& d : result.detections) d.frame_id = cloud.frame_id;
  if (profile) profile_head(features, selected, cfg.head, w.head, result.flops);
  return result;
}

}  // namespace sparsedet
