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

#include <opencv2/core.hpp>

namespace bcstage::data {

/// 8-bit, 3-channel raster in RGB channel order.
struct RgbImage {
  cv::Mat pixels;

  [[nodiscard]] int width() const noexcept { return pixels.cols; }
  [[nodiscard]] int height() const noexcept { return pixels.rows; }
  [[nodiscard]] bool empty() const noexcept { return pixels.empty(); }
};

/// Throws ImageFormatError unless the raster is non-empty CV_8UC3.
void require_rgb(const RgbImage& image);

/// Throws IoError when the file cannot be read and ImageFormatError when it
/// is not an 8-bit RGB image.
[[nodiscard]] RgbImage load_rgb(const std::filesystem::path& path);

void save_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace bcstage::data
