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

// Image-level reference computations for the data pipeline tests.

#include <cstdint>
#include <vector>

#include <opencv2/core.hpp>

namespace bcstage::testing {

/// Counts 8-connected components of pixels whose luminance is below
/// `threshold`, by explicit flood fill.
inline int count_dark_blobs(const cv::Mat& rgb, int threshold = 140) {
  const int h = rgb.rows;
  const int w = rgb.cols;
  std::vector<std::uint8_t> dark(static_cast<std::size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const int lum = (299 * row[x][0] + 587 * row[x][1] + 114 * row[x][2]) / 1000;
      dark[static_cast<std::size_t>(y) * w + x] = lum < threshold ? 1 : 0;
    }
  }
  int components = 0;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (dark[start] != 1) continue;
    ++components;
    dark[start] = 2;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int py = p / w;
      const int px = p % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = py + dy;
          const int nx = px + dx;
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          const int q = ny * w + nx;
          if (dark[q] == 1) {
            dark[q] = 2;
            stack.push_back(q);
          }
        }
      }
    }
  }
  return components;
}

}  // namespace bcstage::testing
