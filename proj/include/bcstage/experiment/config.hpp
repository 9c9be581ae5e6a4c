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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bcstage/data/split.hpp"
#include "bcstage/models/trainer.hpp"

namespace bcstage::experiment {

struct SweepConfig {
  std::filesystem::path manifest_path;
  std::vector<std::string> backbones;  // empty means the default sweep set
  std::vector<double> learning_rates{1e-4, 1e-5, 4e-4};
  models::TrainHyperparams hyper;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 0;
  bool group_by_patient = false;
  std::filesystem::path output_dir = "bcstage_out";
  double ensemble_threshold = 1.0;
  int input_size = 224;
  bool pretrained = false;
  std::filesystem::path pretrained_dir;
  int workers = 1;
  int loader_threads = 1;

  /// Throws ConfigError. Fills `backbones` with the default set when empty.
  void validate();

  [[nodiscard]] data::SplitOptions split_options() const;
  [[nodiscard]] data::PreprocessConfig preprocess() const;
};

/// `key = value` lines; `#` starts a comment. Lists are comma-separated.
using ConfigValues = std::map<std::string, std::string, std::less<>>;

/// Throws ConfigError naming the line on malformed input.
[[nodiscard]] ConfigValues parse_config(std::string_view text, std::string_view source = "<config>");
[[nodiscard]] ConfigValues read_config_file(const std::filesystem::path& path);

/// Overwrites fields present in `values`. Unknown keys and unparsable values
/// throw ConfigError. Relative manifest and output paths resolve against
/// `base_dir`.
void apply_config(SweepConfig& config, const ConfigValues& values, const std::filesystem::path& base_dir = {});

/// Shortest round-trip scientific form: 1e-4, 2.5e-3.
[[nodiscard]] std::string format_lr(double lr);

[[nodiscard]] std::vector<std::string> split_list(std::string_view text);

}  // namespace bcstage::experiment
