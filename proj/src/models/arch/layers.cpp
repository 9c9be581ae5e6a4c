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

#include "arch/layers.hpp"

namespace bcstage::models::arch {

NormFactory batch_norm(double eps, double momentum) {
  return [=](int64_t c) {
    return torch::nn::AnyModule(torch::nn::BatchNorm2d(torch::nn::BatchNorm2dOptions(c).eps(eps).momentum(momentum)));
  };
}

ActFactory relu() {
  return [] { return torch::nn::AnyModule(torch::nn::ReLU(torch::nn::ReLUOptions(true))); };
}

ActFactory silu() {
  return [] { return torch::nn::AnyModule(torch::nn::SiLU()); };
}

ActFactory gelu() {
  return [] { return torch::nn::AnyModule(torch::nn::GELU()); };
}

ActFactory sigmoid() {
  return [] { return torch::nn::AnyModule(torch::nn::Sigmoid()); };
}

Seq conv_norm_act(int64_t in, int64_t out, const ConvNormActOptions& o) {
  const int64_t padding = o.padding.value_or((o.kernel - 1) / 2);
  const bool bias = o.bias.value_or(!o.norm);
  Seq seq;
  seq->push_back(torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, o.kernel).stride(o.stride).padding(padding).groups(o.groups).bias(bias)));
  if (o.norm) seq->push_back(o.norm(out));
  if (o.act) seq->push_back(o.act());
  return seq;
}

torch::Tensor StochasticDepthImpl::forward(torch::Tensor x) {
  if (!is_training() || p_ == 0.0) return x;
  const double survival = 1.0 - p_;
  std::vector<int64_t> size(static_cast<std::size_t>(x.dim()), 1);
  if (row_mode_) size[0] = x.size(0);
  auto noise = torch::empty(size, x.options()).bernoulli_(survival);
  if (survival > 0.0) noise.div_(survival);
  return x * noise;
}

LayerNorm2dImpl::LayerNorm2dImpl(int64_t channels, double eps) : channels_(channels), eps_(eps) {
  weight = register_parameter("weight", torch::ones({channels}));
  bias = register_parameter("bias", torch::zeros({channels}));
}

torch::Tensor LayerNorm2dImpl::forward(torch::Tensor x) {
  x = x.permute({0, 2, 3, 1});
  x = torch::layer_norm(x, {channels_}, weight, bias, eps_);
  return x.permute({0, 3, 1, 2});
}

SqueezeExcitationImpl::SqueezeExcitationImpl(int64_t channels, int64_t squeeze, ActFactory act, ActFactory scale_act)
    : activation_(act()), scale_activation_(scale_act()) {
  avgpool = register_module("avgpool", torch::nn::AdaptiveAvgPool2d(1));
  fc1 = register_module("fc1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, squeeze, 1)));
  fc2 = register_module("fc2", torch::nn::Conv2d(torch::nn::Conv2dOptions(squeeze, channels, 1)));
}

torch::Tensor SqueezeExcitationImpl::forward(torch::Tensor x) {
  auto s = avgpool(x);
  s = activation_.forward(fc1(s));
  s = scale_activation_.forward(fc2(s));
  return s * x;
}

torch::nn::AnyModule flatten() {
  return torch::nn::AnyModule(torch::nn::Flatten(torch::nn::FlattenOptions().start_dim(1)));
}

torch::nn::AnyModule identity() { return torch::nn::AnyModule(torch::nn::Identity()); }

int64_t make_divisible(double v, int64_t divisor, std::optional<int64_t> min_value) {
  const int64_t floor_v = static_cast<int64_t>(v + static_cast<double>(divisor) / 2.0) / divisor * divisor;
  int64_t out = std::max(min_value.value_or(divisor), floor_v);
  if (static_cast<double>(out) < 0.9 * v) out += divisor;
  return out;
}

}  // namespace bcstage::models::arch
