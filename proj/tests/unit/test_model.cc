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


#include <doctest.h>

#include <vector>

#include "sparsedet/backbone.h"
#include "sparsedet/model.h"
#include "sparsedet/scene.h"
#include "test_util.h"

namespace sparsedet {
namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.backbone.channels = {4, 6, 8, 8, 8, 8};
  cfg.head.in_channels = 8;
  return cfg;
}

PointCloud two_object_cloud() {
  SceneSpec spec;
  spec.seed = 12;
  SceneObject car;
  car.id = 1;
  car.box.center = {5.0, 2.0, -1.0};
  car.box.size = {4.5, 1.9, 1.6};
  SceneObject walker;
  walker.id = 2;
  walker.box.cls = 8;
  walker.box.center = {-3.0, 7.0, -1.0};
  walker.box.size = {0.7, 0.7, 1.8};
  spec.objects = {car, walker};
  return generate_scene(spec)[0].cloud;
}

TEST_CASE("every detection comes from an active head voxel") {
  const ModelConfig cfg = small_model();
  const ModelWeights w = random_model_weights(cfg, 21);
  const PointCloud cloud = two_object_cloud();
  const InferenceResult r = run_detector(cloud, cfg, w);
  const SparseTensor head_in =
      forward_backbone(voxelize(cloud, cfg.grid).tensor, w.backbone, cfg.backbone);
  CHECK(r.head_sites == head_in.size());
  REQUIRE_FALSE(r.detections.empty());
  for (const Detection& d : r.detections) {
    CHECK(head_in.contains(d.query_voxel));
    CHECK(d.query_position == voxel_center(d.query_voxel, cfg.grid, 8));
    CHECK(d.frame_id == cloud.frame_id);
  }
}

TEST_CASE("an empty frame yields no detections") {
  const ModelConfig cfg = small_model();
  const ModelWeights w = random_model_weights(cfg, 22);
  PointCloud far;
  far.points.push_back({500.0f, 0.0f, 0.0f, 0.0f});
  const InferenceResult r = run_detector(far, cfg, w, true);
  CHECK(r.empty_frame);
  CHECK(r.detections.empty());
  CHECK(r.flops.total() == 0);
}

TEST_CASE("profiling splits backbone and head FLOPs") {
  const ModelConfig cfg = small_model();
  const ModelWeights w = random_model_weights(cfg, 23);
  const InferenceResult plain = run_detector(two_object_cloud(), cfg, w);
  const InferenceResult r = run_detector(two_object_cloud(), cfg, w, true);
  CHECK(r.flops.total(FlopsGroup::kBackbone) > 0);
  CHECK(r.flops.total(FlopsGroup::kHead) > 0);
  CHECK(r.flops.total() ==
        r.flops.total(FlopsGroup::kBackbone) + r.flops.total(FlopsGroup::kHead));
  CHECK(plain.flops.entries.empty());
  REQUIRE(plain.detections.size() == r.detections.size());
  for (size_t i = 0; i < r.detections.size(); ++i) {
    CHECK(plain.detections[i].box.center == r.detections[i].box.center);
  }
}

TEST_CASE("model config requires the head to match the backbone width") {
  ModelConfig cfg = small_model();
  cfg.head.in_channels = 16;
  CHECK(testing::code_of([&] { cfg.validate(); }) == ErrorCode::kChannelMismatch);
}

}  // namespace
}  // namespace sparsedet
