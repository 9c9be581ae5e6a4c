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

#include "bcstage/data/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "bcstage/core/error.hpp"

namespace bcstage::data {
namespace {

cv::Mat normalize_region(const RgbImage& image, const CropBox& box, const PreprocessConfig& config) {
  const cv::Mat region = image.pixels(cv::Rect(box.x, box.y, box.width, box.height));
  cv::Mat out(region.rows, region.cols, CV_32FC3);
  for (int y = 0; y < region.rows; ++y) {
    const auto* src = region.ptr<cv::Vec3b>(y);
    auto* dst = out.ptr<cv::Vec3f>(y);
    for (int x = 0; x < region.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        dst[x][c] = (static_cast<float>(src[x][c]) / 255.0f - config.mean[c]) / config.std[c];
      }
    }
  }
  return out;
}

cv::Mat resize_to(const cv::Mat& src, int size) {
  if (src.cols == size && src.rows == size) return src;
  const bool shrinking = src.cols >= size && src.rows >= size;
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(size, size), 0.0, 0.0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  return dst;
}

Sample to_chw(const cv::Mat& hwc, bool flip) {
  Sample s;
  s.channels = 3;
  s.height = hwc.rows;
  s.width = hwc.cols;
  s.values.resize(static_cast<std::size_t>(3) * s.height * s.width);
  const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
  for (int y = 0; y < s.height; ++y) {
    const auto* row = hwc.ptr<cv::Vec3f>(y);
    for (int x = 0; x < s.width; ++x) {
      const int sx = flip ? s.width - 1 - x : x;
      const std::size_t offset = static_cast<std::size_t>(y) * s.width + x;
      for (int c = 0; c < 3; ++c) s.values[c * plane + offset] = row[sx][c];
    }
  }
  return s;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (target_size <= 0) throw InvalidArgumentError("target_size must be > 0");
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw InvalidArgumentError("crop scale must satisfy 0 < min <= max <= 1");
  }
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max)) {
    throw InvalidArgumentError("aspect range must satisfy 0 < min <= max");
  }
  if (!(hflip_probability >= 0.0 && hflip_probability <= 1.0)) {
    throw InvalidArgumentError("hflip_probability must lie in [0, 1]");
  }
  for (const float s : std) {
    if (!(s > 0.0f)) throw InvalidArgumentError("normalization std components must be > 0");
  }
}

CropBox sample_crop(int width, int height, const PreprocessConfig& config, Rng& rng) {
  const double area = static_cast<double>(width) * height;
  const double log_lo = std::log(config.aspect_min);
  const double log_hi = std::log(config.aspect_max);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target_area = area * rng.uniform(config.crop_scale_min, config.crop_scale_max);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target_area * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target_area / aspect)));
    if (w > 0 && h > 0 && w <= width && h <= height) {
      const int x = static_cast<int>(rng.between(0, width - w));
      const int y = static_cast<int>(rng.between(0, height - h));
      return CropBox{x, y, w, h};
    }
  }
  // Fallback: whole image, trimmed to the allowed aspect range.
  const double in_ratio = static_cast<double>(width) / height;
  int w = width;
  int h = height;
  if (in_ratio < config.aspect_min) {
    h = static_cast<int>(std::lround(w / config.aspect_min));
  } else if (in_ratio > config.aspect_max) {
    w = static_cast<int>(std::lround(h * config.aspect_max));
  }
  return CropBox{(width - w) / 2, (height - h) / 2, w, h};
}

Sample preprocess_train(const RgbImage& image, const PreprocessConfig& config, Rng& rng) {
  require_rgb(image);
  config.validate();
  const CropBox box = sample_crop(image.width(), image.height(), config, rng);
  const bool flip = rng.bernoulli(config.hflip_probability);
  return to_chw(resize_to(normalize_region(image, box, config), config.target_size), flip);
}

Sample preprocess_eval(const RgbImage& image, const PreprocessConfig& config) {
  require_rgb(image);
  config.validate();
  const CropBox whole{0, 0, image.width(), image.height()};
  return to_chw(resize_to(normalize_region(image, whole, config), config.target_size), false);
}

}  // namespace bcstage::data
