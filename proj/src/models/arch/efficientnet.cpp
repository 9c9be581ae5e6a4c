// Copyright (c) 2026, The bcstage Authors. All rights reserved.
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

#include "arch/architectures.hpp"
#include "arch/layers.hpp"

namespace bcstage::models::arch {
namespace {

namespace nn = torch::nn;

struct StageConfig {
  bool fused;
  double expand_ratio;
  int64_t kernel;
  int64_t stride;
  int64_t in;
  int64_t out;
  int64_t layers;
};

class MbBlockImpl : public nn::Module {
 public:
  MbBlockImpl(const StageConfig& c, double sd_prob, const NormFactory& norm)
      : use_res_(c.stride == 1 && c.in == c.out) {
    const int64_t expanded = make_divisible(static_cast<double>(c.in) * c.expand_ratio, 8);
    Seq layers;
    if (c.fused) {
      if (expanded != c.in) {
        layers->push_back(conv_norm_act(c.in, expanded, {.kernel = c.kernel, .stride = c.stride, .norm = norm, .act = silu()}));
        layers->push_back(conv_norm_act(expanded, c.out, {.kernel = 1, .norm = norm, .act = nullptr}));
      } else {
        layers->push_back(conv_norm_act(c.in, c.out, {.kernel = c.kernel, .stride = c.stride, .norm = norm, .act = silu()}));
      }
    } else {
      if (expanded != c.in) layers->push_back(conv_norm_act(c.in, expanded, {.kernel = 1, .norm = norm, .act = silu()}));
      layers->push_back(conv_norm_act(
          expanded, expanded, {.kernel = c.kernel, .stride = c.stride, .groups = expanded, .norm = norm, .act = silu()}));
      layers->push_back(SqueezeExcitation(expanded, std::max<int64_t>(1, c.in / 4), silu()));
      layers->push_back(conv_norm_act(expanded, c.out, {.kernel = 1, .norm = norm, .act = nullptr}));
    }
    block = register_module("block", layers);
    stochastic_depth = register_module("stochastic_depth", StochasticDepth(sd_prob, true));
  }

  torch::Tensor forward(torch::Tensor x) {
    auto r = block->forward(x);
    if (use_res_) r = stochastic_depth(r) + x;
    return r;
  }

 private:
  bool use_res_;
  Seq block{nullptr};
  StochasticDepth stochastic_depth{nullptr};
};

class EfficientNetImpl : public ClassifierImpl {
 public:
  EfficientNetImpl(const std::vector<StageConfig>& setting, int64_t last_channel, double dropout, int64_t num_classes) {
    const auto norm = batch_norm(1e-3);
    constexpr double kStochasticDepth = 0.2;
    Seq f;
    f->push_back(conv_norm_act(3, setting.front().in, {.kernel = 3, .stride = 2, .norm = norm, .act = silu()}));
    int64_t total = 0;
    for (const auto& s : setting) total += s.layers;
    int64_t block_id = 0;
    for (const auto& s : setting) {
      Seq stage;
      for (int64_t i = 0; i < s.layers; ++i) {
        StageConfig c = s;
        if (i > 0) {
          c.in = c.out;
          c.stride = 1;
        }
        const double sd = kStochasticDepth * static_cast<double>(block_id) / static_cast<double>(total);
        stage->push_back(std::make_shared<MbBlockImpl>(c, sd, norm));
        ++block_id;
      }
      f->push_back(stage);
    }
    f->push_back(conv_norm_act(setting.back().out, last_channel, {.kernel = 1, .norm = norm, .act = silu()}));
    features = register_module("features", f);
    classifier = register_module(
        "classifier", Seq(nn::Dropout(nn::DropoutOptions(dropout).inplace(true)), nn::Linear(last_channel, num_classes)));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = features->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return classifier->forward(x);
  }

 private:
  Seq features{nullptr};
  Seq classifier{nullptr};
};

}  // namespace

Classifier make_efficientnet_v2_m(int64_t num_classes) {
  const std::vector<StageConfig> setting{
      {true, 1, 3, 1, 24, 24, 3},      {true, 4, 3, 2, 24, 48, 5},     {true, 4, 3, 2, 48, 80, 5},
      {false, 4, 3, 2, 80, 160, 7},    {false, 6, 3, 1, 160, 176, 14}, {false, 6, 3, 2, 176, 304, 18},
      {false, 6, 3, 1, 304, 512, 5},
  };
  return std::make_shared<EfficientNetImpl>(setting, 1280, 0.3, num_classes);
}

}  // namespace bcstage::models::arch
