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

#include "bcstage/models/registry.hpp"

#include <cmath>
#include <cstdlib>

#include "arch/architectures.hpp"
#include "arch/layers.hpp"
#include "bcstage/core/error.hpp"
#include "bcstage/models/weights_io.hpp"

namespace bcstage::models {
namespace {

namespace nn = torch::nn;

const std::vector<BackboneInfo> kRegistry{
    {"resnet18", "resnet18", "Resnet 18", "fc"},
    {"resnet50", "resnet50", "Resnet 50", "fc"},
    {"resnet152", "resnet152", "Resnet 152", "fc"},
    {"efficientnet_m", "efficientnet_v2_m", "EfficientNet (M)", "classifier.1"},
    {"convnext_base", "convnext_base", "ConvNext (Base)", "classifier.2"},
    {"wide_resnet101", "wide_resnet101_2", "Wide Resnet 101", "fc"},
    {"vgg", "vgg16", "VGG", "classifier.6"},
    {"resnext101", "resnext101_32x8d", "ResNext 101", "fc", false},
    {"regnet_x32gf", "regnet_x_32gf", "RegNet", "fc"},
    {"swin_b", "swin_b", "SwinT (B)", "head"},
    {"maxvit", "maxvit_t", "MaxVit", "classifier.5", true, true, true},
    {"tiny_test_cnn", "tiny_test_cnn", "Tiny test CNN", "head", false, false},
};

void trunc_normal(torch::Tensor& t, double std, at::Generator& gen) {
  // Inverse-CDF sampling on [-2 std, 2 std].
  const double lo = std::erf(-2.0 / std::sqrt(2.0));
  const double hi = std::erf(2.0 / std::sqrt(2.0));
  t.uniform_(lo, hi, gen).erfinv_().mul_(std * std::sqrt(2.0)).clamp_(-2.0 * std, 2.0 * std);
}

void kaiming_fan_out(torch::Tensor& w, at::Generator& gen) {
  int64_t fan_out = w.size(0);
  for (int64_t d = 2; d < w.dim(); ++d) fan_out *= w.size(d);
  w.normal_(0.0, std::sqrt(2.0 / static_cast<double>(fan_out)), gen);
}

bool is_norm(const nn::Module& m) {
  return dynamic_cast<const nn::BatchNorm2dImpl*>(&m) != nullptr || dynamic_cast<const nn::LayerNormImpl*>(&m) != nullptr ||
         dynamic_cast<const arch::LayerNorm2dImpl*>(&m) != nullptr;
}

// Every parameter receives a value drawn from `gen` or a constant, so the
// result depends on the seed alone.
void seeded_init(nn::Module& net, std::string_view head_prefix, std::uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  torch::NoGradGuard no_grad;
  const std::string head(head_prefix);
  for (const auto& item : net.named_modules("", true)) {
    const auto& name = item.key();
    auto& m = *item.value();
    const bool in_head = name == head;
    for (auto p : m.named_parameters(false)) {
      auto& t = p.value();
      const auto& pname = p.key();
      if (pname == "bias" && (dynamic_cast<nn::Conv2dImpl*>(&m) || dynamic_cast<nn::LinearImpl*>(&m))) {
        t.zero_();
      } else if (in_head && pname == "weight") {
        t.normal_(0.0, 0.01, gen);
      } else if (dynamic_cast<nn::Conv2dImpl*>(&m)) {
        kaiming_fan_out(t, gen);
      } else if (dynamic_cast<nn::LinearImpl*>(&m)) {
        trunc_normal(t, 0.02, gen);
      } else if (is_norm(m)) {
        if (pname == "weight") t.fill_(1.0);
        else t.zero_();
      } else if (pname == "layer_scale") {
        t.fill_(1e-6);
      } else if (pname == "relative_position_bias_table") {
        trunc_normal(t, 0.02, gen);
      } else {
        throw Error("no initialization rule for parameter " + name + "." + pname);
      }
    }
  }
}

}  // namespace

const std::vector<BackboneInfo>& backbone_registry() { return kRegistry; }

std::vector<std::string> list_backbones() {
  std::vector<std::string> out;
  for (const auto& b : kRegistry) out.emplace_back(b.id);
  return out;
}

std::vector<std::string> default_sweep_backbones() {
  std::vector<std::string> out;
  for (const auto& b : kRegistry) {
    if (b.default_sweep) out.emplace_back(b.id);
  }
  return out;
}

const BackboneInfo& backbone_info(std::string_view id) {
  for (const auto& b : kRegistry) {
    if (b.id == id) return b;
  }
  throw RegistryError("unknown backbone '" + std::string(id) + "'");
}

void ModelSpec::validate() const {
  (void)backbone_info(backbone_id);
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive and finite");
  }
}

std::filesystem::path default_pretrained_dir() {
  if (const char* env = std::getenv("BCSTAGE_PRETRAINED_DIR"); env != nullptr && *env != '\0') return env;
  const char* home = std::getenv("HOME");
  return std::filesystem::path(home != nullptr ? home : ".") / ".cache" / "bcstage" / "pretrained";
}

Classifier build_architecture(std::string_view architecture, int num_classes, int input_size) {
  const int64_t k = num_classes;
  if (architecture == "resnet18") return arch::make_resnet18(k);
  if (architecture == "resnet50") return arch::make_resnet50(k);
  if (architecture == "resnet152") return arch::make_resnet152(k);
  if (architecture == "wide_resnet101_2") return arch::make_wide_resnet101_2(k);
  if (architecture == "resnext101_32x8d") return arch::make_resnext101_32x8d(k);
  if (architecture == "vgg16") return arch::make_vgg16(k);
  if (architecture == "efficientnet_v2_m") return arch::make_efficientnet_v2_m(k);
  if (architecture == "convnext_base") return arch::make_convnext_base(k);
  if (architecture == "regnet_x_32gf") return arch::make_regnet_x_32gf(k);
  if (architecture == "swin_b") return arch::make_swin_b(k);
  if (architecture == "maxvit_t") return arch::make_maxvit_t(k, input_size);
  if (architecture == "tiny_test_cnn") return arch::make_tiny_test_cnn(k);
  throw RegistryError("unknown architecture '" + std::string(architecture) + "'");
}

StageModel build_model(const ModelSpec& spec, const BuildOptions& options) {
  spec.validate();
  const auto& info = backbone_info(spec.backbone_id);
  StageModel model{spec, build_architecture(info.architecture, kNumStages, options.input_size), options.input_size};
  seeded_init(*model.net, info.head_prefix, options.seed);
  if (spec.pretrained) {
    if (!info.has_pretrained_source) {
      throw FetchError("backbone '" + spec.backbone_id + "' has no published pretrained weights");
    }
    const auto dir = options.pretrained_dir.empty() ? default_pretrained_dir() : options.pretrained_dir;
    const auto path = dir / (std::string(info.architecture) + ".bin");
    if (!std::filesystem::exists(path)) {
      throw FetchError("pretrained weights for '" + spec.backbone_id + "' not found at " + path.string() +
                       "; export them with tools/export_torchvision_weights.py or set BCSTAGE_PRETRAINED_DIR");
    }
    load_state(*model.net, decode_weights(read_file(path)), {std::string(info.head_prefix) + ".", true});
  }
  return model;
}

}  // namespace bcstage::models
