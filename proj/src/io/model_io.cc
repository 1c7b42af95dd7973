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

#include "sparsedet/io/model_io.h"

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "sparsedet/errors.h"

namespace sparsedet::io {

namespace {

const char* const kNormParts[] = {"gamma", "beta", "mean", "var"};

// Visits every layer of the model with its tensor-name prefix.
template <typename Weights, typename Fn>
void for_each_layer(Weights& w, const ModelConfig& cfg, Fn fn) {
  fn(std::string("backbone.stem"), w.backbone.stem);
  for (int s = 0; s < kNumStages; ++s) {
    auto& stage = w.backbone.stages[static_cast<size_t>(s)];
    const std::string prefix = "backbone.stage" + std::to_string(s + 1);
    if (s > 0) fn(prefix + ".down", stage.down);
    for (size_t b = 0; b < stage.blocks.size(); ++b) {
      const std::string block = prefix + ".block" + std::to_string(b + 1);
      fn(block + ".conv1", stage.blocks[b].conv1);
      fn(block + ".conv2", stage.blocks[b].conv2);
    }
  }
  for (int g = 0; g < cfg.head.num_groups(); ++g) {
    const std::string prefix = "head.group" + std::to_string(g);
    fn(prefix + ".cls", w.head.cls[static_cast<size_t>(g)]);
    fn(prefix + ".reg", w.head.reg[static_cast<size_t>(g)]);
  }
}

// Every layer at its configured shape, zero-filled.
ModelWeights skeleton(const ModelConfig& cfg) {
  ModelWeights w;
  const auto& bc = cfg.backbone;
  const int dims = bc.dims();
  w.backbone.stem = ConvLayer::zeros(ConvMode::kSubmanifold, dims, bc.kernel_size,
                                     bc.in_channels, bc.channels[0]);
  for (int s = 0; s < kNumStages; ++s) {
    auto& stage = w.backbone.stages[static_cast<size_t>(s)];
    const int c = bc.channels[static_cast<size_t>(s)];
    if (s > 0) {
      stage.down = ConvLayer::zeros(ConvMode::kStrided, dims, bc.kernel_size,
                                    bc.channels[static_cast<size_t>(s - 1)], c);
    }
    for (int b = 0; b < bc.blocks_per_stage; ++b) {
      stage.blocks.push_back(
          {ConvLayer::zeros(ConvMode::kSubmanifold, dims, bc.kernel_size, c, c),
           ConvLayer::zeros(ConvMode::kSubmanifold, dims, bc.kernel_size, c, c)});
    }
  }
  const auto& hc = cfg.head;
  for (int g = 0; g < hc.num_groups(); ++g) {
    const int group_classes = static_cast<int>(hc.group_classes(g).size());
    w.head.cls.push_back(ConvLayer::zeros(ConvMode::kSubmanifold, 2, hc.head_kernel,
                                          hc.in_channels, group_classes));
    w.head.reg.push_back(ConvLayer::zeros(ConvMode::kSubmanifold, 2, hc.head_kernel,
                                          hc.in_channels,
                                          group_classes * hc.regression_width()));
  }
  return w;
}

std::vector<uint32_t> weight_shape(const ConvLayer& layer) {
  std::vector<uint32_t> shape(static_cast<size_t>(layer.dims),
                              static_cast<uint32_t>(layer.kernel_size));
  shape.push_back(static_cast<uint32_t>(layer.in_channels));
  shape.push_back(static_cast<uint32_t>(layer.out_channels));
  return shape;
}

std::string shape_string(const std::vector<uint32_t>& shape) {
  std::string s = "{";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "}";
}

const NamedTensor& take(const std::map<std::string, const NamedTensor*>& by_name,
                        std::set<std::string>& used, const std::string& name,
                        const std::vector<uint32_t>& shape) {
  auto it = by_name.find(name);
  if (it == by_name.end()) fail(ErrorCode::kMissingTensor, "tensor '" + name + "' not found");
  if (it->second->shape != shape) {
    fail(ErrorCode::kShapeMismatch, "tensor '" + name + "' has shape " +
                                        shape_string(it->second->shape) + ", expected " +
                                        shape_string(shape));
  }
  used.insert(name);
  return *it->second;
}

void fold_norm(ConvLayer& layer, const std::vector<float>& gamma,
               const std::vector<float>& beta, const std::vector<float>& mean,
               const std::vector<float>& var) {
  const size_t cout = static_cast<size_t>(layer.out_channels);
  std::vector<double> scale(cout);
  for (size_t c = 0; c < cout; ++c) {
    scale[c] = static_cast<double>(gamma[c]) /
               std::sqrt(static_cast<double>(var[c]) + kNormEpsilon);
    layer.bias[c] = static_cast<float>((static_cast<double>(layer.bias[c]) - mean[c]) *
                                           scale[c] +
                                       beta[c]);
  }
  for (size_t i = 0; i < layer.weights.size(); ++i) {
    layer.weights[i] = static_cast<float>(layer.weights[i] * scale[i % cout]);
  }
}

}  // namespace

std::vector<std::string> expected_layer_names(const ModelConfig& cfg) {
  std::vector<std::string> names;
  ModelWeights w = skeleton(cfg);
  for_each_layer(w, cfg, [&](const std::string& name, ConvLayer&) { names.push_back(name); });
  return names;
}

WeightFile to_weight_file(const ModelWeights& w, const ModelConfig& cfg) {
  cfg.validate();
  w.backbone.check(cfg.backbone);
  w.head.check(cfg.head);
  WeightFile file;
  for_each_layer(w, cfg, [&](const std::string& name, const ConvLayer& layer) {
    file.tensors.push_back({name + ".weight", weight_shape(layer), layer.weights});
    file.tensors.push_back(
        {name + ".bias", {static_cast<uint32_t>(layer.out_channels)}, layer.bias});
  });
  return file;
}

ModelWeights from_weight_file(const WeightFile& file, const ModelConfig& cfg) {
  cfg.validate();
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : file.tensors) by_name[t.name] = &t;
  std::set<std::string> used;

  ModelWeights w = skeleton(cfg);
  for_each_layer(w, cfg, [&](const std::string& name, ConvLayer& layer) {
    const std::vector<uint32_t> bias_shape = {static_cast<uint32_t>(layer.out_channels)};
    layer.weights = take(by_name, used, name + ".weight", weight_shape(layer)).data;
    layer.bias = take(by_name, used, name + ".bias", bias_shape).data;

    int present = 0;
    for (const char* part : kNormParts) present += by_name.count(name + ".norm." + part) ? 1 : 0;
    if (present == 0) return;
    if (present != 4) {
      fail(ErrorCode::kMissingTensor,
           "layer '" + name + "' has a partial set of normalization tensors");
    }
    fold_norm(layer, take(by_name, used, name + ".norm.gamma", bias_shape).data,
              take(by_name, used, name + ".norm.beta", bias_shape).data,
              take(by_name, used, name + ".norm.mean", bias_shape).data,
              take(by_name, used, name + ".norm.var", bias_shape).data);
  });
  for (const auto& t : file.tensors) {
    if (!used.count(t.name)) fail(ErrorCode::kUnknownTensor, "unexpected tensor '" + t.name + "'");
  }
  w.backbone.check(cfg.backbone);
  w.head.check(cfg.head);
  return w;
}

ModelWeights load_weights(const std::filesystem::path& path, const ModelConfig& cfg) {
  return from_weight_file(read_weights(path), cfg);
}

void save_weights(const std::filesystem::path& path, const ModelWeights& w,
                  const ModelConfig& cfg) {
  write_weights(path, to_weight_file(w, cfg));
}

void add_random_norm(WeightFile& file, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> gamma(0.5f, 1.5f);
  std::uniform_real_distribution<float> beta(-0.1f, 0.1f);
  std::uniform_real_distribution<float> mean(-0.2f, 0.2f);
  std::uniform_real_distribution<float> var(0.5f, 2.0f);
  std::vector<NamedTensor> out;
  for (const auto& t : file.tensors) {
    out.push_back(t);
    const std::string suffix = ".bias";
    if (t.name.size() <= suffix.size() ||
        t.name.compare(t.name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string layer = t.name.substr(0, t.name.size() - suffix.size());
    const size_t n = t.data.size();
    auto make = [&](const char* part, auto& dist) {
      NamedTensor nt{layer + ".norm." + part, t.shape, std::vector<float>(n)};
      for (auto& v : nt.data) v = dist(rng);
      out.push_back(std::move(nt));
    };
    make("gamma", gamma);
    make("beta", beta);
    make("mean", mean);
    make("var", var);
  }
  file.tensors = std::move(out);
}

}  // namespace sparsedet::io
