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

#include <array>
#include <cstddef>
#include <vector>

#include "bcstage/data/image.hpp"
#include "bcstage/util/rng.hpp"

namespace bcstage::data {

/// ImageNet statistics, shared by every pretrained backbone in the registry.
inline constexpr std::array<float, 3> kImageNetMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageNetStd{0.229f, 0.224f, 0.225f};

struct PreprocessConfig {
  int target_size = 224;
  double crop_scale_min = 0.8;
  double crop_scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  double hflip_probability = 0.5;
  std::array<float, 3> mean = kImageNetMean;
  std::array<float, 3> std = kImageNetStd;

  void validate() const;
};

/// Normalized CHW float sample.
struct Sample {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  [[nodiscard]] float at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

struct CropBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Random-area, random-aspect crop window. Ten attempts are made to fit a
/// window of the sampled area and log-uniform aspect; otherwise the largest
/// centered window with aspect clamped to [aspect_min, aspect_max] is used.
[[nodiscard]] CropBox sample_crop(int width, int height, const PreprocessConfig& config, Rng& rng);

/// Random crop, resize to target_size², optional horizontal flip, then
/// per-channel (x / 255 - mean) / std.
[[nodiscard]] Sample preprocess_train(const RgbImage& image, const PreprocessConfig& config, Rng& rng);

/// Deterministic resize to target_size² and normalization.
[[nodiscard]] Sample preprocess_eval(const RgbImage& image, const PreprocessConfig& config);

}  // namespace bcstage::data
