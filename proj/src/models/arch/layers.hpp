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

#pragma once

// Building blocks shared by the torchvision-equivalent architectures. Module
// and parameter names follow torchvision so state dicts line up one to one.

#include <functional>
#include <optional>
#include <vector>

#include <torch/torch.h>

namespace bcstage::models::arch {

/// Sequential with a concrete forward so it can nest inside other
/// Sequentials.
class SeqImpl : public torch::nn::SequentialImpl {
 public:
  using SequentialImpl::SequentialImpl;
  torch::Tensor forward(torch::Tensor x) { return SequentialImpl::forward(x); }
};
TORCH_MODULE(Seq);

using NormFactory = std::function<torch::nn::AnyModule(int64_t channels)>;
using ActFactory = std::function<torch::nn::AnyModule()>;

NormFactory batch_norm(double eps = 1e-5, double momentum = 0.1);
ActFactory relu();
ActFactory silu();
ActFactory gelu();
ActFactory sigmoid();

struct ConvNormActOptions {
  int64_t kernel = 3;
  int64_t stride = 1;
  int64_t groups = 1;
  std::optional<int64_t> padding;  // default (kernel - 1) / 2
  NormFactory norm = batch_norm();  // null disables the norm layer
  ActFactory act = relu();          // null disables the activation
  std::optional<bool> bias;         // default: no bias when a norm follows
};

/// Sequential(conv, [norm], [act]) named "0", "1", "2".
Seq conv_norm_act(int64_t in, int64_t out, const ConvNormActOptions& o);

class StochasticDepthImpl : public torch::nn::Module {
 public:
  StochasticDepthImpl(double p, bool row_mode) : p_(p), row_mode_(row_mode) {}
  torch::Tensor forward(torch::Tensor x);

 private:
  double p_;
  bool row_mode_;
};
TORCH_MODULE(StochasticDepth);

/// Channel-first LayerNorm over dimension 1.
class LayerNorm2dImpl : public torch::nn::Module {
 public:
  explicit LayerNorm2dImpl(int64_t channels, double eps = 1e-6);
  torch::Tensor forward(torch::Tensor x);

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  int64_t channels_;
  double eps_;
};
TORCH_MODULE(LayerNorm2d);

class PermuteImpl : public torch::nn::Module {
 public:
  explicit PermuteImpl(std::vector<int64_t> dims) : dims_(std::move(dims)) {}
  torch::Tensor forward(torch::Tensor x) { return x.permute(dims_); }

 private:
  std::vector<int64_t> dims_;
};
TORCH_MODULE(Permute);

class SqueezeExcitationImpl : public torch::nn::Module {
 public:
  SqueezeExcitationImpl(int64_t channels, int64_t squeeze, ActFactory act, ActFactory scale_act = sigmoid());
  torch::Tensor forward(torch::Tensor x);

 private:
  torch::nn::AdaptiveAvgPool2d avgpool{nullptr};
  torch::nn::Conv2d fc1{nullptr};
  torch::nn::Conv2d fc2{nullptr};
  torch::nn::AnyModule activation_;
  torch::nn::AnyModule scale_activation_;
};
TORCH_MODULE(SqueezeExcitation);

/// Flatten(start_dim = 1) as a Sequential-compatible module.
torch::nn::AnyModule flatten();

/// Identity placeholder that keeps later Sequential indices stable.
torch::nn::AnyModule identity();

/// Number of output channels rounded to a multiple of `divisor`, never
/// dropping more than 10 percent below `v`.
int64_t make_divisible(double v, int64_t divisor, std::optional<int64_t> min_value = std::nullopt);

}  // namespace bcstage::models::arch
