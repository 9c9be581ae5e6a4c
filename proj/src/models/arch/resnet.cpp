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

nn::Conv2d conv(int64_t in, int64_t out, int64_t k, int64_t stride = 1, int64_t groups = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).groups(groups).bias(false));
}

class BlockImpl : public nn::Module {
 public:
  virtual torch::Tensor forward(torch::Tensor x) = 0;
};

class BasicBlockImpl : public BlockImpl {
 public:
  BasicBlockImpl(int64_t inplanes, int64_t planes, int64_t stride, Seq downsample) {
    conv1 = register_module("conv1", conv(inplanes, planes, 3, stride));
    bn1 = register_module("bn1", nn::BatchNorm2d(planes));
    conv2 = register_module("conv2", conv(planes, planes, 3));
    bn2 = register_module("bn2", nn::BatchNorm2d(planes));
    if (downsample) downsample_ = register_module("downsample", downsample);
  }

  torch::Tensor forward(torch::Tensor x) override {
    auto out = torch::relu(bn1(conv1(x)));
    out = bn2(conv2(out));
    out += downsample_ ? downsample_->forward(x) : x;
    return torch::relu(out);
  }

 private:
  nn::Conv2d conv1{nullptr}, conv2{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  Seq downsample_{nullptr};
};

class BottleneckImpl : public BlockImpl {
 public:
  BottleneckImpl(int64_t inplanes, int64_t planes, int64_t stride, Seq downsample, int64_t groups,
                 int64_t base_width) {
    const int64_t width = static_cast<int64_t>(static_cast<double>(planes) * (static_cast<double>(base_width) / 64.0)) * groups;
    conv1 = register_module("conv1", conv(inplanes, width, 1));
    bn1 = register_module("bn1", nn::BatchNorm2d(width));
    conv2 = register_module("conv2", conv(width, width, 3, stride, groups));
    bn2 = register_module("bn2", nn::BatchNorm2d(width));
    conv3 = register_module("conv3", conv(width, planes * 4, 1));
    bn3 = register_module("bn3", nn::BatchNorm2d(planes * 4));
    if (downsample) downsample_ = register_module("downsample", downsample);
  }

  torch::Tensor forward(torch::Tensor x) override {
    auto out = torch::relu(bn1(conv1(x)));
    out = torch::relu(bn2(conv2(out)));
    out = bn3(conv3(out));
    out += downsample_ ? downsample_->forward(x) : x;
    return torch::relu(out);
  }

 private:
  nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
  Seq downsample_{nullptr};
};

struct ResNetConfig {
  bool bottleneck;
  std::array<int64_t, 4> layers;
  int64_t groups = 1;
  int64_t width_per_group = 64;
};

class ResNetImpl : public ClassifierImpl {
 public:
  ResNetImpl(const ResNetConfig& cfg, int64_t num_classes) : cfg_(cfg) {
    const int64_t expansion = cfg.bottleneck ? 4 : 1;
    conv1 = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
    bn1 = register_module("bn1", nn::BatchNorm2d(64));
    const std::array<int64_t, 4> planes{64, 128, 256, 512};
    for (int i = 0; i < 4; ++i) {
      stages_[i] = register_module("layer" + std::to_string(i + 1), make_layer(planes[i], cfg.layers[i], i == 0 ? 1 : 2));
    }
    fc = register_module("fc", nn::Linear(512 * expansion, num_classes));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = torch::relu(bn1(conv1(x)));
    x = torch::max_pool2d(x, 3, 2, 1);
    for (auto& s : stages_) x = s->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return fc(x);
  }

 private:
  Seq make_layer(int64_t planes, int64_t blocks, int64_t stride) {
    const int64_t expansion = cfg_.bottleneck ? 4 : 1;
    Seq downsample{nullptr};
    if (stride != 1 || inplanes_ != planes * expansion) {
      downsample = Seq(conv(inplanes_, planes * expansion, 1, stride), nn::BatchNorm2d(planes * expansion));
    }
    Seq layer;
    for (int64_t b = 0; b < blocks; ++b) {
      const int64_t s = b == 0 ? stride : 1;
      auto ds = b == 0 ? downsample : Seq{nullptr};
      if (cfg_.bottleneck) {
        layer->push_back(std::make_shared<BottleneckImpl>(inplanes_, planes, s, ds, cfg_.groups, cfg_.width_per_group));
      } else {
        layer->push_back(std::make_shared<BasicBlockImpl>(inplanes_, planes, s, ds));
      }
      inplanes_ = planes * expansion;
    }
    return layer;
  }

  ResNetConfig cfg_;
  int64_t inplanes_ = 64;
  nn::Conv2d conv1{nullptr};
  nn::BatchNorm2d bn1{nullptr};
  std::array<Seq, 4> stages_{Seq{nullptr}, Seq{nullptr}, Seq{nullptr},
                                         Seq{nullptr}};
  nn::Linear fc{nullptr};
};

}  // namespace

Classifier make_resnet18(int64_t num_classes) {
  return std::make_shared<ResNetImpl>(ResNetConfig{false, {2, 2, 2, 2}}, num_classes);
}

Classifier make_resnet50(int64_t num_classes) {
  return std::make_shared<ResNetImpl>(ResNetConfig{true, {3, 4, 6, 3}}, num_classes);
}

Classifier make_resnet152(int64_t num_classes) {
  return std::make_shared<ResNetImpl>(ResNetConfig{true, {3, 8, 36, 3}}, num_classes);
}

Classifier make_wide_resnet101_2(int64_t num_classes) {
  return std::make_shared<ResNetImpl>(ResNetConfig{true, {3, 4, 23, 3}, 1, 128}, num_classes);
}

Classifier make_resnext101_32x8d(int64_t num_classes) {
  return std::make_shared<ResNetImpl>(ResNetConfig{true, {3, 4, 23, 3}, 32, 8}, num_classes);
}

}  // namespace bcstage::models::arch
