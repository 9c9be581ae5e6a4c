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

#include "bcstage/data/image.hpp"

#include <fstream>
#include <iterator>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bcstage/core/error.hpp"

namespace bcstage::data {

void require_rgb(const RgbImage& image) {
  if (image.pixels.empty() || image.pixels.rows == 0 || image.pixels.cols == 0) {
    throw ImageFormatError("degenerate image (0 pixels)");
  }
  if (image.pixels.type() != CV_8UC3) {
    throw ImageFormatError("expected 8-bit RGB image, got " + std::to_string(image.pixels.channels()) +
                           " channel(s) of depth " + std::to_string(image.pixels.depth()));
  }
}

RgbImage load_rgb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read slide image " + path.string());
  }
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.empty()) {
    throw ImageFormatError("empty image file " + path.string());
  }
  cv::Mat decoded = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
  if (decoded.empty()) {
    throw ImageFormatError("undecodable image " + path.string());
  }
  if (decoded.type() != CV_8UC3) {
    throw ImageFormatError("slide image " + path.string() + " is not 8-bit RGB");
  }
  RgbImage image;
  cv::cvtColor(decoded, image.pixels, cv::COLOR_BGR2RGB);
  return image;
}

void save_png(const RgbImage& image, const std::filesystem::path& path) {
  require_rgb(image);
  cv::Mat bgr;
  cv::cvtColor(image.pixels, bgr, cv::COLOR_RGB2BGR);
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".png", bgr, bytes, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw IoError("PNG encoding failed for " + path.string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("short write on " + path.string());
  }
}

}  // namespace bcstage::data
