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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bcstage/core/stage.hpp"
#include "bcstage/data/image.hpp"
#include "bcstage/data/manifest.hpp"
#include "bcstage/data/preprocess.hpp"
#include "bcstage/models/registry.hpp"

namespace bcstage::models {

/// Decoded-image cache bound to one manifest. Every path it reads is
/// recorded, which lets training prove it never touched held-out images.
class SlideSource {
 public:
  explicit SlideSource(const data::DatasetManifest& manifest) : base_dir_(manifest.base_dir) {}
  explicit SlideSource(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  /// Throws IoError naming the slide when the image cannot be read.
  const data::RgbImage& image(const data::SlideRecord& slide);

  [[nodiscard]] const std::set<std::filesystem::path>& reads() const noexcept { return reads_; }

 private:
  std::filesystem::path base_dir_;
  std::map<std::filesystem::path, data::RgbImage> cache_;
  std::set<std::filesystem::path> reads_;
};

struct PredictionRecord {
  std::string biopsy_id;
  std::vector<Stage> slide_stages;
  BiopsyScore pcs;
  std::optional<Stage> actual;
};

/// Per-slide argmax stages, aligned with the input. Runs in inference mode
/// without touching weights; samples must all be 3 x S x S with S the model's
/// input size (InputError otherwise).
[[nodiscard]] std::vector<Stage> predict_slides(const StageModel& model, std::span<const data::Sample> samples);

/// Evaluates every slide of the biopsy as one batch and averages the stages.
[[nodiscard]] PredictionRecord predict_biopsy(const StageModel& model, const data::BiopsyRecord& biopsy,
                                              SlideSource& source, const data::PreprocessConfig& preprocess);

/// predict_biopsy over every biopsy, in manifest order.
[[nodiscard]] std::vector<PredictionRecord> predict_manifest(const StageModel& model,
                                                             const data::DatasetManifest& manifest,
                                                             SlideSource& source,
                                                             const data::PreprocessConfig& preprocess);

/// MSE over the labeled records. Throws EmptyEvaluationError when none are.
[[nodiscard]] double prediction_mse(std::span<const PredictionRecord> records);

}  // namespace bcstage::models
