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

class VggImpl : public ClassifierImpl {
 public:
  explicit VggImpl(int64_t num_classes) {
    constexpr int64_t kPool = -1;
    const std::vector<int64_t> cfg{64,  64,  kPool, 128, 128, kPool, 256, 256, 256, kPool,
                                   512, 512, 512,   kPool, 512, 512, 512, kPool};
    Seq f;
    int64_t in = 3;
    for (const int64_t v : cfg) {
      if (v == kPool) {
        f->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
      } else {
        f->push_back(nn::Conv2d(nn::Conv2dOptions(in, v, 3).padding(1)));
        f->push_back(nn::ReLU(nn::ReLUOptions(true)));
        in = v;
      }
    }
    features = register_module("features", f);
    classifier = register_module(
        "classifier", Seq(nn::Linear(512 * 7 * 7, 4096), nn::ReLU(nn::ReLUOptions(true)), nn::Dropout(0.5),
                                     nn::Linear(4096, 4096), nn::ReLU(nn::ReLUOptions(true)), nn::Dropout(0.5),
                                     nn::Linear(4096, num_classes)));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = features->forward(x);
    x = torch::adaptive_avg_pool2d(x, {7, 7}).flatten(1);
    return classifier->forward(x);
  }

 private:
  Seq features{nullptr};
  Seq classifier{nullptr};
};

// Three conv stages, global pooling and a linear head. Sized so a CPU epoch
// over a few hundred 224px slides takes seconds.
class TinyCnnImpl : public ClassifierImpl {
 public:
  explicit TinyCnnImpl(int64_t num_classes) {
    features = register_module(
        "features",
        Seq(nn::Conv2d(nn::Conv2dOptions(3, 16, 5).stride(4).padding(2)), nn::BatchNorm2d(16),
                       nn::ReLU(), nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)),
                       nn::Conv2d(nn::Conv2dOptions(16, 32, 3).padding(1)), nn::BatchNorm2d(32), nn::ReLU(),
                       nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)),
                       nn::Conv2d(nn::Conv2dOptions(32, 32, 3).padding(1)), nn::BatchNorm2d(32), nn::ReLU()));
    head = register_module("head", nn::Linear(32, num_classes));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = features->forward(x);
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return head(x);
  }

 private:
  Seq features{nullptr};
  nn::Linear head{nullptr};
};

}  // namespace

Classifier make_vgg16(int64_t num_classes) { return std::make_shared<VggImpl>(num_classes); }

Classifier make_tiny_test_cnn(int64_t num_classes) { return std::make_shared<TinyCnnImpl>(num_classes); }

}  // namespace bcstage::models::arch
