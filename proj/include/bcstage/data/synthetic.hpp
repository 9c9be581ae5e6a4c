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

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "bcstage/core/stage.hpp"
#include "bcstage/data/manifest.hpp"

namespace bcstage::data {

struct SyntheticConfig {
  std::size_t n_biopsies = 200;
  int slides_min = 2;
  int slides_max = 4;
  std::uint64_t seed = 0;
  double unlabeled_fraction = 0.1;
  int image_size = 256;
  /// Chance that a biopsy belongs to the previous patient.
  double repeat_patient_probability = 0.25;

  void validate() const;
};

/// Expected number of dark blobs on a slide of the given stage.
[[nodiscard]] constexpr double blob_rate(Stage stage) noexcept { return 5.0 + 10.0 * stage.value(); }

/// Writes `<out_dir>/images/<biopsy_id>_<slide_idx>.png` and
/// `<out_dir>/manifest.csv`. Stages are assigned round-robin; exactly
/// round(unlabeled_fraction * n) biopsies are emitted without a stage. Each
/// slide carries Poisson(blob_rate(stage)) non-overlapping dark ellipses on a
/// textured light background. Output is a pure function of the config.
DatasetManifest generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out_dir);

}  // namespace bcstage::data
