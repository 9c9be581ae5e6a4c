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

#include <gtest/gtest.h>

#include <torch/torch.h>

#include "bcstage/core/error.hpp"
#include "bcstage/models/registry.hpp"
#include "bcstage/models/weights_io.hpp"
#include "support/oracles.hpp"

namespace bcstage::models {
namespace {

TEST(RegistryTest, ListsEveryBackboneInCanonicalOrder) {
  const std::vector<std::string> expected{"resnet18",       "resnet50", "resnet152",  "efficientnet_m",
                                          "convnext_base",  "wide_resnet101", "vgg", "resnext101",
                                          "regnet_x32gf",   "swin_b",   "maxvit",     "tiny_test_cnn"};
  EXPECT_EQ(list_backbones(), expected);
}

TEST(RegistryTest, DefaultSweepHasTheTenReportedModels) {
  const auto sweep = default_sweep_backbones();
  EXPECT_EQ(sweep.size(), 10u);
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), "resnext101"), 0);
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), "tiny_test_cnn"), 0);
}

TEST(RegistryTest, UnknownIdThrows) {
  EXPECT_THROW((void)backbone_info("alexnet"), RegistryError);
  ModelSpec spec;
  spec.backbone_id = "alexnet";
  EXPECT_THROW((void)build_model(spec), RegistryError);
}

TEST(RegistryTest, SpecValidation) {
  ModelSpec spec;
  spec.backbone_id = "tiny_test_cnn";
  spec.learning_rate = 0.0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.learning_rate = -1e-4;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.learning_rate = 1e-4;
  EXPECT_NO_THROW(spec.validate());
}

TEST(RegistryTest, MissingPretrainedWeightsRaiseFetchError) {
  const auto empty = testing::scratch_dir("no_weights");
  ModelSpec spec;
  spec.backbone_id = "resnet18";
  spec.pretrained = true;
  BuildOptions options;
  options.pretrained_dir = empty;
  try {
    (void)build_model(spec, options);
    FAIL() << "expected FetchError";
  } catch (const FetchError& e) {
    EXPECT_NE(std::string(e.what()).find("resnet18.bin"), std::string::npos);
  }
  spec.backbone_id = "tiny_test_cnn";
  EXPECT_THROW((void)build_model(spec, options), FetchError);
}

TEST(RegistryTest, PretrainedLoadKeepsSeededHead) {
  // A weights file that covers the backbone but not the head, as the exporter
  // writes for a 1000-class model.
  const auto dir = testing::scratch_dir("fake_pretrained");
  auto source = build_architecture("tiny_test_cnn", 5, 32);
  std::vector<NamedTensor> tensors;
  for (auto& t : collect_state(*source)) {
    if (t.name.rfind("head.", 0) == 0) continue;
    t.tensor = torch::full_like(t.tensor, 0.5);
    tensors.push_back(t);
  }
  tensors.push_back({"head.weight", torch::zeros({1000, 32})});
  tensors.push_back({"head.bias", torch::zeros({1000})});
  write_file(dir / "tiny_test_cnn.bin", encode_weights(tensors));

  // tiny_test_cnn has no pretrained source, so load through the architecture
  // and check the skip rule directly.
  auto net = build_architecture("tiny_test_cnn", 5, 32);
  load_state(*net, decode_weights(read_file(dir / "tiny_test_cnn.bin")), {"head.", true});
  for (const auto& t : collect_state(*net)) {
    if (t.name.rfind("head.", 0) == 0) continue;
    if (t.tensor.is_floating_point()) EXPECT_TRUE(torch::all(t.tensor == 0.5).item<bool>()) << t.name;
  }
}

TEST(RegistryTest, TinyForwardShape) {
  ModelSpec spec;
  spec.backbone_id = "tiny_test_cnn";
  BuildOptions options;
  options.input_size = 64;
  auto model = build_model(spec, options);
  model.net->eval();
  torch::NoGradGuard guard;
  const auto out = model.net->forward(torch::randn({2, 3, 64, 64}));
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{2, 5}));
}

TEST(RegistryTest, Resnet18ForwardShape) {
  auto net = build_architecture("resnet18", 5, 64);
  net->eval();
  torch::NoGradGuard guard;
  EXPECT_EQ(net->forward(torch::randn({2, 3, 64, 64})).sizes(), (std::vector<int64_t>{2, 5}));
}

TEST(RegistryTest, MaxvitRejectsUntileableInput) {
  EXPECT_THROW((void)build_architecture("maxvit_t", 5, 100), InvalidArgumentError);
}

TEST(RegistryTest, SeededInitIsDeterministic) {
  ModelSpec spec;
  spec.backbone_id = "tiny_test_cnn";
  BuildOptions options;
  options.seed = 3;
  const auto a = collect_state(*build_model(spec, options).net);
  const auto b = collect_state(*build_model(spec, options).net);
  options.seed = 4;
  const auto c = collect_state(*build_model(spec, options).net);
  ASSERT_EQ(a.size(), b.size());
  bool any_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(torch::equal(a[i].tensor, b[i].tensor)) << a[i].name;
    if (!torch::equal(a[i].tensor, c[i].tensor)) any_differs = true;
  }
  EXPECT_TRUE(any_differs);
}

TEST(WeightsIoTest, RoundTripPreservesNamesShapesAndValues) {
  std::vector<NamedTensor> in{{"a", torch::randn({3, 4})},
                              {"b.c", torch::randn({2}, torch::kFloat64)},
                              {"steps", torch::tensor({7}, torch::kInt64)},
                              {"scalar", torch::tensor(1.5f)}};
  const auto out = decode_weights(encode_weights(in));
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i].name, in[i].name);
    EXPECT_TRUE(torch::equal(out[i].tensor, in[i].tensor)) << in[i].name;
  }
}

TEST(WeightsIoTest, MalformedInputThrows) {
  const auto bytes = encode_weights({{"w", torch::ones({4})}});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW((void)decode_weights(bad_magic), FormatError);
  EXPECT_THROW((void)decode_weights(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW((void)decode_weights(bytes + "x"), FormatError);
  EXPECT_THROW((void)decode_weights(""), FormatError);
}

TEST(WeightsIoTest, LoadStateRejectsMismatches) {
  auto net = build_architecture("tiny_test_cnn", 5, 32);
  auto state = collect_state(*net);
  auto wrong_shape = state;
  wrong_shape.front().tensor = torch::zeros({1});
  EXPECT_THROW(load_state(*net, wrong_shape), FormatError);
  auto missing = state;
  missing.pop_back();
  EXPECT_THROW(load_state(*net, missing), FormatError);
  auto extra = state;
  extra.push_back({"nope", torch::zeros({1})});
  EXPECT_THROW(load_state(*net, extra), FormatError);
}

TEST(WeightsIoTest, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace bcstage::models
