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
using torch::indexing::None;
using torch::indexing::Slice;

torch::Tensor relative_position_index(int64_t window) {
  const auto coords_h = torch::arange(window);
  const auto coords_w = torch::arange(window);
  const auto grid = torch::meshgrid({coords_h, coords_w}, "ij");
  const auto flat = torch::stack({grid[0], grid[1]}).flatten(1);
  auto rel = (flat.unsqueeze(2) - flat.unsqueeze(1)).permute({1, 2, 0}).contiguous();
  rel.index({Slice(), Slice(), 0}) += window - 1;
  rel.index({Slice(), Slice(), 1}) += window - 1;
  rel.index({Slice(), Slice(), 0}) *= 2 * window - 1;
  return rel.sum(-1).flatten();
}

class ShiftedWindowAttentionImpl : public nn::Module {
 public:
  ShiftedWindowAttentionImpl(int64_t dim, int64_t window, int64_t shift, int64_t heads)
      : window_(window), shift_(shift), heads_(heads) {
    qkv = register_module("qkv", nn::Linear(dim, dim * 3));
    proj = register_module("proj", nn::Linear(dim, dim));
    relative_position_bias_table = register_parameter(
        "relative_position_bias_table", torch::zeros({(2 * window - 1) * (2 * window - 1), heads}));
    relative_position_index_ = register_buffer("relative_position_index", relative_position_index(window));
  }

  torch::Tensor forward(torch::Tensor input) {
    const int64_t n = window_ * window_;
    const auto bias = relative_position_bias_table.index({relative_position_index_})
                          .view({n, n, -1})
                          .permute({2, 0, 1})
                          .contiguous()
                          .unsqueeze(0);

    const int64_t B = input.size(0), H = input.size(1), W = input.size(2), C = input.size(3);
    const int64_t pad_r = (window_ - W % window_) % window_;
    const int64_t pad_b = (window_ - H % window_) % window_;
    auto x = torch::constant_pad_nd(input, {0, 0, 0, pad_r, 0, pad_b});
    const int64_t pH = x.size(1), pW = x.size(2);
    const int64_t sh = window_ >= pH ? 0 : shift_;
    const int64_t sw = window_ >= pW ? 0 : shift_;
    const bool shifted = sh + sw > 0;
    if (shifted) x = torch::roll(x, {-sh, -sw}, {1, 2});

    const int64_t nw = (pH / window_) * (pW / window_);
    x = x.view({B, pH / window_, window_, pW / window_, window_, C}).permute({0, 1, 3, 2, 4, 5}).reshape({B * nw, n, C});
    auto qkv_out = qkv(x).reshape({x.size(0), x.size(1), 3, heads_, C / heads_}).permute({2, 0, 3, 1, 4});
    auto q = qkv_out[0] * std::pow(static_cast<double>(C / heads_), -0.5);
    auto attn = q.matmul(qkv_out[1].transpose(-2, -1)) + bias;

    if (shifted) {
      auto mask = x.new_zeros({pH, pW});
      const std::array<std::pair<int64_t, int64_t>, 3> hs{{{0, pH - window_}, {pH - window_, pH - sh}, {pH - sh, pH}}};
      const std::array<std::pair<int64_t, int64_t>, 3> ws{{{0, pW - window_}, {pW - window_, pW - sw}, {pW - sw, pW}}};
      int count = 0;
      for (const auto& h : hs) {
        for (const auto& w : ws) {
          mask.index_put_({Slice(h.first, h.second), Slice(w.first, w.second)}, count);
          ++count;
        }
      }
      mask = mask.view({pH / window_, window_, pW / window_, window_}).permute({0, 2, 1, 3}).reshape({nw, n});
      mask = mask.unsqueeze(1) - mask.unsqueeze(2);
      mask = mask.masked_fill(mask != 0, -100.0).masked_fill(mask == 0, 0.0);
      attn = attn.view({x.size(0) / nw, nw, heads_, n, n}) + mask.unsqueeze(1).unsqueeze(0);
      attn = attn.view({-1, heads_, n, n});
    }
    attn = torch::softmax(attn, -1);
    x = attn.matmul(qkv_out[2]).transpose(1, 2).reshape({x.size(0), n, C});
    x = proj(x);
    x = x.view({B, pH / window_, pW / window_, window_, window_, C}).permute({0, 1, 3, 2, 4, 5}).reshape({B, pH, pW, C});
    if (shifted) x = torch::roll(x, {sh, sw}, {1, 2});
    return x.index({Slice(), Slice(None, H), Slice(None, W), Slice()}).contiguous();
  }

  torch::Tensor relative_position_bias_table;

 private:
  int64_t window_;
  int64_t shift_;
  int64_t heads_;
  nn::Linear qkv{nullptr};
  nn::Linear proj{nullptr};
  torch::Tensor relative_position_index_;
};
TORCH_MODULE(ShiftedWindowAttention);

class SwinBlockImpl : public nn::Module {
 public:
  SwinBlockImpl(int64_t dim, int64_t heads, int64_t window, int64_t shift, double sd_prob) {
    norm1 = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({dim}).eps(1e-5)));
    attn = register_module("attn", ShiftedWindowAttention(dim, window, shift, heads));
    stochastic_depth = register_module("stochastic_depth", StochasticDepth(sd_prob, true));
    norm2 = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({dim}).eps(1e-5)));
    mlp = register_module("mlp", Seq(nn::Linear(dim, 4 * dim), nn::GELU(), nn::Dropout(0.0),
                                                nn::Linear(4 * dim, dim), nn::Dropout(0.0)));
  }

  torch::Tensor forward(torch::Tensor x) {
    x = x + stochastic_depth(attn(norm1(x)));
    return x + stochastic_depth(mlp->forward(norm2(x)));
  }

 private:
  nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  ShiftedWindowAttention attn{nullptr};
  StochasticDepth stochastic_depth{nullptr};
  Seq mlp{nullptr};
};

class PatchMergingImpl : public nn::Module {
 public:
  explicit PatchMergingImpl(int64_t dim) {
    reduction = register_module("reduction", nn::Linear(nn::LinearOptions(4 * dim, 2 * dim).bias(false)));
    norm = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({4 * dim}).eps(1e-5)));
  }

  torch::Tensor forward(torch::Tensor x) {
    const int64_t H = x.size(-3), W = x.size(-2);
    x = torch::constant_pad_nd(x, {0, 0, 0, W % 2, 0, H % 2});
    const auto x0 = x.index({"...", Slice(0, None, 2), Slice(0, None, 2), Slice()});
    const auto x1 = x.index({"...", Slice(1, None, 2), Slice(0, None, 2), Slice()});
    const auto x2 = x.index({"...", Slice(0, None, 2), Slice(1, None, 2), Slice()});
    const auto x3 = x.index({"...", Slice(1, None, 2), Slice(1, None, 2), Slice()});
    return reduction(norm(torch::cat({x0, x1, x2, x3}, -1)));
  }

 private:
  nn::Linear reduction{nullptr};
  nn::LayerNorm norm{nullptr};
};

class SwinImpl : public ClassifierImpl {
 public:
  explicit SwinImpl(int64_t num_classes) {
    constexpr int64_t kEmbed = 128;
    constexpr int64_t kWindow = 7;
    constexpr double kStochasticDepth = 0.5;
    const std::array<int64_t, 4> depths{2, 2, 18, 2};
    const std::array<int64_t, 4> heads{4, 8, 16, 32};

    Seq f;
    f->push_back(Seq(nn::Conv2d(nn::Conv2dOptions(3, kEmbed, 4).stride(4)), Permute(std::vector<int64_t>{0, 2, 3, 1}),
                                nn::LayerNorm(nn::LayerNormOptions({kEmbed}).eps(1e-5))));
    int64_t total = 0;
    for (const auto d : depths) total += d;
    int64_t block_id = 0;
    for (std::size_t s = 0; s < depths.size(); ++s) {
      const int64_t dim = kEmbed << s;
      Seq stage;
      for (int64_t i = 0; i < depths[s]; ++i) {
        const double sd = kStochasticDepth * static_cast<double>(block_id) / static_cast<double>(total - 1);
        stage->push_back(std::make_shared<SwinBlockImpl>(dim, heads[s], kWindow, i % 2 == 0 ? 0 : kWindow / 2, sd));
        ++block_id;
      }
      f->push_back(stage);
      if (s + 1 < depths.size()) f->push_back(std::make_shared<PatchMergingImpl>(dim));
    }
    features = register_module("features", f);
    const int64_t num_features = kEmbed << 3;
    norm = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({num_features}).eps(1e-5)));
    head = register_module("head", nn::Linear(num_features, num_classes));
  }

  torch::Tensor forward(torch::Tensor x) override {
    x = norm(features->forward(x)).permute({0, 3, 1, 2});
    x = torch::adaptive_avg_pool2d(x, {1, 1}).flatten(1);
    return head(x);
  }

 private:
  Seq features{nullptr};
  nn::LayerNorm norm{nullptr};
  nn::Linear head{nullptr};
};

}  // namespace

Classifier make_swin_b(int64_t num_classes) { return std::make_shared<SwinImpl>(num_classes); }

}  // namespace bcstage::models::arch
