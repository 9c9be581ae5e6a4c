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
#include "bcstage/core/error.hpp"

namespace bcstage::models::arch {
namespace {

namespace nn = torch::nn;

int64_t conv_out(int64_t size) { return (size - 3 + 2) / 2 + 1; }

NormFactory maxvit_norm() { return batch_norm(1e-3, 0.01); }

class MaxVitMbConvImpl : public nn::Module {
 public:
  MaxVitMbConvImpl(int64_t in, int64_t out, int64_t stride, double sd_prob) {
    if (stride != 1 || in != out) {
      Seq p;
      if (stride == 2) p->push_back(nn::AvgPool2d(nn::AvgPool2dOptions(3).stride(2).padding(1)));
      p->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 1)));
      proj = register_module("proj", p);
    }
    if (sd_prob > 0.0) stochastic_depth = register_module("stochastic_depth", StochasticDepth(sd_prob, true));
    const int64_t mid = out * 4;
    const int64_t sqz = out / 4;
    const auto norm = maxvit_norm();
    Seq l;
    l->push_back("pre_norm", norm(in));
    l->push_back("conv_a", conv_norm_act(in, mid, {.kernel = 1, .padding = 0, .norm = norm, .act = gelu()}));
    l->push_back("conv_b", conv_norm_act(mid, mid, {.kernel = 3, .stride = stride, .groups = mid, .padding = 1, .norm = norm, .act = gelu()}));
    l->push_back("squeeze_excitation", SqueezeExcitation(mid, sqz, silu()));
    l->push_back("conv_c", nn::Conv2d(nn::Conv2dOptions(mid, out, 1)));
    layers = register_module("layers", l);
  }

  torch::Tensor forward(torch::Tensor x) {
    auto res = proj ? proj->forward(x) : x;
    auto y = layers->forward(x);
    if (stochastic_depth) y = stochastic_depth(y);
    return res + y;
  }

 private:
  Seq proj{nullptr};
  Seq layers{nullptr};
  StochasticDepth stochastic_depth{nullptr};
};

class RelativeAttentionImpl : public nn::Module {
 public:
  RelativeAttentionImpl(int64_t feat_dim, int64_t head_dim, int64_t size)
      : heads_(feat_dim / head_dim), head_dim_(head_dim), size_(size), scale_(std::pow(static_cast<double>(feat_dim), -0.5)) {
    to_qkv = register_module("to_qkv", nn::Linear(feat_dim, heads_ * head_dim * 3));
    merge = register_module("merge", nn::Linear(head_dim * heads_, feat_dim));
    relative_position_bias_table =
        register_parameter("relative_position_bias_table", torch::zeros({(2 * size - 1) * (2 * size - 1), heads_}));
    const auto grid = torch::meshgrid({torch::arange(size), torch::arange(size)}, "ij");
    const auto flat = torch::stack({grid[0], grid[1]}).flatten(1);
    auto rel = (flat.unsqueeze(2) - flat.unsqueeze(1)).permute({1, 2, 0}).contiguous();
    using torch::indexing::Slice;
    rel.index({Slice(), Slice(), 0}) += size - 1;
    rel.index({Slice(), Slice(), 1}) += size - 1;
    rel.index({Slice(), Slice(), 0}) *= 2 * size - 1;
    relative_position_index_ = register_buffer("relative_position_index", rel.sum(-1));
  }

  torch::Tensor forward(torch::Tensor x) {
    const int64_t B = x.size(0), G = x.size(1), P = x.size(2), D = x.size(3);
    const auto chunks = to_qkv(x).chunk(3, -1);
    const auto q = chunks[0].reshape({B, G, P, heads_, head_dim_}).permute({0, 1, 3, 2, 4});
    const auto k = chunks[1].reshape({B, G, P, heads_, head_dim_}).permute({0, 1, 3, 2, 4}) * scale_;
    const auto v = chunks[2].reshape({B, G, P, heads_, head_dim_}).permute({0, 1, 3, 2, 4});
    const int64_t seq = size_ * size_;
    const auto bias = relative_position_bias_table.index({relative_position_index_.view(-1)})
                          .view({seq, seq, -1})
                          .permute({2, 0, 1})
                          .contiguous()
                          .unsqueeze(0);
    const auto attn = torch::softmax(q.matmul(k.transpose(-2, -1)) + bias, -1);
    auto out = attn.matmul(v).permute({0, 1, 3, 2, 4}).reshape({B, G, P, D});
    return merge(out);
  }

  torch::Tensor relative_position_bias_table;

 private:
  int64_t heads_;
  int64_t head_dim_;
  int64_t size_;
  double scale_;
  nn::Linear to_qkv{nullptr};
  nn::Linear merge{nullptr};
  torch::Tensor relative_position_index_;
};
TORCH_MODULE(RelativeAttention);

class PartitionAttentionImpl : public nn::Module {
 public:
  PartitionAttentionImpl(int64_t channels, int64_t head_dim, int64_t partition, bool grid, int64_t grid_size,
                         double sd_prob)
      : grid_(grid), grid_size_(grid_size) {
    const int64_t n_partitions = grid_size / partition;
    p_ = grid ? n_partitions : partition;
    attn_layer = register_module("attn_layer", Seq(nn::LayerNorm(nn::LayerNormOptions({channels})),
                                                              RelativeAttention(channels, head_dim, partition),
                                                              nn::Dropout(0.0)));
    mlp_layer = register_module("mlp_layer", Seq(nn::LayerNorm(nn::LayerNormOptions({channels})),
                                                            nn::Linear(channels, channels * 4), nn::GELU(),
                                                            nn::Linear(channels * 4, channels), nn::Dropout(0.0)));
    stochastic_dropout = register_module("stochastic_dropout", StochasticDepth(sd_prob, true));
  }

  torch::Tensor forward(torch::Tensor x) {
    const int64_t B = x.size(0), C = x.size(1), H = x.size(2), W = x.size(3);
    const int64_t gh = grid_size_ / p_, gw = grid_size_ / p_;
    x = x.reshape({B, C, H / p_, p_, W / p_, p_}).permute({0, 2, 4, 3, 5, 1}).reshape({B, (H / p_) * (W / p_), p_ * p_, C});
    if (grid_) x = x.swapaxes(-2, -3);
    x = x + stochastic_dropout(attn_layer->forward(x));
    x = x + stochastic_dropout(mlp_layer->forward(x));
    if (grid_) x = x.swapaxes(-2, -3);
    return x.reshape({B, gh, gw, p_, p_, C}).permute({0, 5, 1, 3, 2, 4}).reshape({B, C, gh * p_, gw * p_});
  }

 private:
  bool grid_;
  int64_t grid_size_;
  int64_t p_;
  Seq attn_layer{nullptr};
  Seq mlp_layer{nullptr};
  StochasticDepth stochastic_dropout{nullptr};
};

class MaxVitLayerImpl : public nn::Module {
 public:
  MaxVitLayerImpl(int64_t in, int64_t out, int64_t stride, double sd_prob, int64_t grid_size) {
    constexpr int64_t kHeadDim = 32;
    constexpr int64_t kPartition = 7;
    Seq l;
    l->push_back("MBconv", std::make_shared<MaxVitMbConvImpl>(in, out, stride, sd_prob));
    l->push_back("window_attention",
                 std::make_shared<PartitionAttentionImpl>(out, kHeadDim, kPartition, false, grid_size, sd_prob));
    l->push_back("grid_attention",
                 std::make_shared<PartitionAttentionImpl>(out, kHeadDim, kPartition, true, grid_size, sd_prob));
    layers = register_module("layers", l);
  }

  torch::Tensor forward(torch::Tensor x) { return layers->forward(x); }

 private:
  Seq layers{nullptr};
};

class MaxVitImpl : public ClassifierImpl {
 public:
  MaxVitImpl(int64_t num_classes, int64_t input_size) {
    constexpr int64_t kStem = 64;
    constexpr int64_t kPartition = 7;
    constexpr double kStochasticDepth = 0.2;
    const std::array<int64_t, 4> channels{64, 128, 256, 512};
    const std::array<int64_t, 4> depths{2, 2, 5, 2};

    int64_t check = conv_out(input_size);
    for (std::size_t i = 0; i < channels.size(); ++i) {
      check = conv_out(check);
      if (check % kPartition != 0) {
        throw InvalidArgumentError("maxvit input size " + std::to_string(input_size) +
                                   " does not tile into 7x7 attention windows");
      }
    }

    const auto norm = maxvit_norm();
    stem = register_module("stem", Seq(conv_norm_act(3, kStem, {.kernel = 3, .stride = 2, .norm = norm, .act = gelu(), .bias = false}),
                                                  conv_norm_act(kStem, kStem, {.kernel = 3, .norm = nullptr, .act = nullptr, .bias = true})));
    int64_t grid = conv_out(input_size);
    int64_t total = 0;
    for (const auto d : depths) total += d;
    int64_t p_idx = 0;
    blocks = register_module("blocks", nn::ModuleList());
    int64_t in = kStem;
    for (std::size_t b = 0; b < channels.size(); ++b) {
      grid = conv_out(grid);
      auto block = std::make_shared<nn::Module>();
      nn::ModuleList layers;
      for (int64_t i = 0; i < depths[b]; ++i, ++p_idx) {
        // numpy.linspace(0, p, total)
        const double sd = kStochasticDepth * static_cast<double>(p_idx) / static_cast<double>(total - 1);
        auto layer = std::make_shared<MaxVitLayerImpl>(i == 0 ? in : channels[b], channels[b], i == 0 ? 2 : 1, sd, grid);
        layers->push_back(layer);
        layer_seq_.push_back(layer);
      }
      block->register_module("layers", layers);
      blocks->push_back(block);
      in = channels[b];
    }
    const int64_t last = channels.back();
    Seq head;
    head->push_back(nn::AdaptiveAvgPool2d(1));
    head->push_back(flatten());
    head->push_back(nn::LayerNorm(nn::LayerNormOptions({last})));
    head->push_back(nn::Linear(last, last));
    head->push_back(nn::Tanh());
    head->push_back(nn::Linear(nn::LinearOptions(last, num_classes).bias(false)));
    classifier = register_module("classifier", head);
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = stem->forward(x);
    for (const auto& layer : layer_seq_) x = layer->forward(x);
    return classifier->forward(x);
  }

 private:
  Seq stem{nullptr};
  nn::ModuleList blocks{nullptr};
  Seq classifier{nullptr};
  std::vector<std::shared_ptr<MaxVitLayerImpl>> layer_seq_;
};

}  // namespace

Classifier make_maxvit_t(int64_t num_classes, int64_t input_size) {
  return std::make_shared<MaxVitImpl>(num_classes, input_size);
}

}  // namespace bcstage::models::arch
