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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace bcstage::models {

/// Every classifier maps an N x 3 x H x W batch to N x 5 stage logits.
class ClassifierImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(torch::Tensor x) = 0;
};
using Classifier = std::shared_ptr<ClassifierImpl>;

inline constexpr int kNumStages = 5;

struct BackboneInfo {
  std::string_view id;
  /// Concrete torchvision-equivalent variant, recorded in checkpoint metadata.
  std::string_view architecture;
  std::string_view display_name;
  /// Parameter-name prefix of the classification head that gets replaced.
  std::string_view head_prefix;
  /// Member of the default ten-model sweep.
  bool default_sweep = true;
  /// Whether a published ImageNet checkpoint exists for this backbone.
  bool has_pretrained_source = true;
  /// Architectures with attention windows fix the input resolution.
  bool fixed_input_size = false;
};

/// Canonical registry order: the eleven published backbones, then
/// tiny_test_cnn.
[[nodiscard]] const std::vector<BackboneInfo>& backbone_registry();
[[nodiscard]] std::vector<std::string> list_backbones();
[[nodiscard]] std::vector<std::string> default_sweep_backbones();
/// Throws RegistryError for unknown ids.
[[nodiscard]] const BackboneInfo& backbone_info(std::string_view id);

struct ModelSpec {
  std::string backbone_id;
  double learning_rate = 1e-4;
  bool pretrained = false;

  void validate() const;
};

struct BuildOptions {
  std::uint64_t seed = 0;
  int input_size = 224;
  /// Directory holding `<architecture>.bin` ImageNet weights; empty selects
  /// default_pretrained_dir().
  std::filesystem::path pretrained_dir;
};

/// $BCSTAGE_PRETRAINED_DIR, else ~/.cache/bcstage/pretrained.
[[nodiscard]] std::filesystem::path default_pretrained_dir();

struct StageModel {
  ModelSpec spec;
  Classifier net;
  int input_size = 224;

  [[nodiscard]] const BackboneInfo& info() const { return backbone_info(spec.backbone_id); }
};

/// Builds the backbone with a freshly initialized 5-way head. Initialization
/// draws from a private generator seeded by `options.seed`, so identical
/// seeds give identical weights without touching global RNG state. With
/// spec.pretrained the backbone (not the head) is loaded from the pretrained
/// directory; a missing file raises FetchError rather than falling back to
/// random weights.
[[nodiscard]] StageModel build_model(const ModelSpec& spec, const BuildOptions& options = {});

/// Builds a torchvision-equivalent network by architecture name with an
/// arbitrary head width. Used by the registry and by parity tooling.
[[nodiscard]] Classifier build_architecture(std::string_view architecture, int num_classes, int input_size = 224);

}  // namespace bcstage::models
