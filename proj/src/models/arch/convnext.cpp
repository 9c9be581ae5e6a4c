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

class CnBlockImpl : public nn::Module {
 public:
  CnBlockImpl(int64_t dim, double layer_scale_init, double sd_prob) {
    block = register_module(
        "block",
        Seq(nn::Conv2d(nn::Conv2dOptions(dim, dim, 7).padding(3).groups(dim)), Permute(std::vector<int64_t>{0, 2, 3, 1}),
                       nn::LayerNorm(nn::LayerNormOptions({dim}).eps(1e-6)), nn::Linear(dim, 4 * dim), nn::GELU(),
                       nn::Linear(4 * dim, dim), Permute(std::vector<int64_t>{0, 3, 1, 2})));
    layer_scale = register_parameter("layer_scale", torch::full({dim, 1, 1}, layer_scale_init));
    stochastic_depth = register_module("stochastic_depth", StochasticDepth(sd_prob, true));
  }

  torch::Tensor forward(torch::Tensor x) { return stochastic_depth(layer_scale * block->forward(x)) + x; }

 private:
  Seq block{nullptr};
  torch::Tensor layer_scale;
  StochasticDepth stochastic_depth{nullptr};
};

class ConvNextImpl : public ClassifierImpl {
 public:
  explicit ConvNextImpl(int64_t num_classes) {
    struct Stage {
      int64_t in;
      int64_t out;  // 0 for the last stage
      int64_t layers;
    };
    const std::vector<Stage> setting{{128, 256, 3}, {256, 512, 3}, {512, 1024, 27}, {1024, 0, 3}};
    constexpr double kStochasticDepth = 0.5;
    constexpr double kLayerScale = 1e-6;
    const NormFactory ln2d = [](int64_t c) { return nn::AnyModule(LayerNorm2d(c, 1e-6)); };

    Seq f;
    f->push_back(conv_norm_act(3, 128, {.kernel = 4, .stride = 4, .padding = 0, .norm = ln2d, .act = nullptr, .bias = true}));
    int64_t total = 0;
    for (const auto& s : setting) total += s.layers;
    int64_t block_id = 0;
    for (const auto& s : setting) {
      Seq stage;
      for (int64_t i = 0; i < s.layers; ++i) {
        const double sd = kStochasticDepth * static_cast<double>(block_id) / (static_cast<double>(total) - 1.0);
        stage->push_back(std::make_shared<CnBlockImpl>(s.in, kLayerScale, sd));
        ++block_id;
      }
      f->push_back(stage);
      if (s.out != 0) {
        Seq down;
        down->push_back(ln2d(s.in));
        down->push_back(nn::Conv2d(nn::Conv2dOptions(s.in, s.out, 2).stride(2)));
        f->push_back(down);
      }
    }
    features = register_module("features", f);
    Seq head;
    head->push_back(ln2d(1024));
    head->push_back(flatten());
    head->push_back(nn::Linear(1024, num_classes));
    classifier = register_module("classifier", head);
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = torch::adaptive_avg_pool2d(features->forward(x), {1, 1});
    return classifier->forward(x);
  }

 private:
  Seq features{nullptr};
  Seq classifier{nullptr};
};

}  // namespace

Classifier make_convnext_base(int64_t num_classes) { return std::make_shared<ConvNextImpl>(num_classes); }

}  // namespace bcstage::models::arch
