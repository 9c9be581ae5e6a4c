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

#include <cmath>
#include <set>

#include "arch/architectures.hpp"
#include "arch/layers.hpp"

namespace bcstage::models::arch {
namespace {

namespace nn = torch::nn;

struct StageParams {
  int64_t width;
  int64_t depth;
  int64_t group_width;
};

// Quantized linear width schedule. Evaluated with float32 tensor ops so the
// rounding matches the reference implementation exactly.
std::vector<StageParams> regnet_stages(int64_t depth, int64_t w0, double wa, double wm, int64_t group_width) {
  constexpr int64_t kQuant = 8;
  const auto widths_cont = torch::arange(depth) * wa + static_cast<double>(w0);
  const auto capacity = torch::round(torch::log(widths_cont / static_cast<double>(w0)) / std::log(wm));
  const auto widths_t =
      (torch::round(torch::div(static_cast<double>(w0) * torch::pow(wm, capacity), static_cast<double>(kQuant))) * kQuant)
          .to(torch::kInt32);
  std::vector<int64_t> widths(static_cast<std::size_t>(depth));
  for (int64_t i = 0; i < depth; ++i) widths[static_cast<std::size_t>(i)] = widths_t[i].item<int32_t>();

  std::vector<StageParams> stages;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i == 0 || widths[i] != widths[i - 1]) {
      stages.push_back({widths[i], 1, group_width});
    } else {
      ++stages.back().depth;
    }
  }
  // Widths and groups must be compatible (bottleneck multiplier 1).
  for (auto& s : stages) {
    s.group_width = std::min(s.group_width, s.width);
    s.width = make_divisible(static_cast<double>(s.width), s.group_width);
  }
  return stages;
}

class ResBottleneckBlockImpl : public nn::Module {
 public:
  ResBottleneckBlockImpl(int64_t in, int64_t out, int64_t stride, int64_t group_width) {
    if (in != out || stride != 1) {
      proj = register_module("proj", conv_norm_act(in, out, {.kernel = 1, .stride = stride, .act = nullptr}));
    }
    const int64_t wb = out;
    const int64_t groups = wb / group_width;
    Seq t;
    t->push_back("a", conv_norm_act(in, wb, {.kernel = 1}));
    t->push_back("b", conv_norm_act(wb, wb, {.kernel = 3, .stride = stride, .groups = groups}));
    t->push_back("c", conv_norm_act(wb, out, {.kernel = 1, .act = nullptr}));
    f = register_module("f", t);
  }

  torch::Tensor forward(torch::Tensor x) {
    auto y = f->forward(x);
    return torch::relu(proj ? proj->forward(x) + y : x + y);
  }

 private:
  Seq proj{nullptr};
  Seq f{nullptr};
};

class RegNetImpl : public ClassifierImpl {
 public:
  RegNetImpl(const std::vector<StageParams>& stages, int64_t num_classes) {
    constexpr int64_t kStemWidth = 32;
    stem = register_module("stem", conv_norm_act(3, kStemWidth, {.kernel = 3, .stride = 2}));
    Seq trunk;
    int64_t width = kStemWidth;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      Seq stage;
      for (int64_t d = 0; d < stages[i].depth; ++d) {
        stage->push_back("block" + std::to_string(i + 1) + "-" + std::to_string(d),
                         std::make_shared<ResBottleneckBlockImpl>(d == 0 ? width : stages[i].width, stages[i].width,
                                                                  d == 0 ? 2 : 1, stages[i].group_width));
      }
      trunk->push_back("block" + std::to_string(i + 1), stage);
      width = stages[i].width;
    }
    trunk_output = register_module("trunk_output", trunk);
    fc = register_module("fc", nn::Linear(width, num_classes));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = trunk_output->forward(stem->forward(x));
    return fc(torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1));
  }

 private:
  Seq stem{nullptr};
  Seq trunk_output{nullptr};
  nn::Linear fc{nullptr};
};

}  // namespace

Classifier make_regnet_x_32gf(int64_t num_classes) {
  return std::make_shared<RegNetImpl>(regnet_stages(23, 320, 69.86, 2.0, 168), num_classes);
}

}  // namespace bcstage::models::arch
