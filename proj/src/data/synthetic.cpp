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

#include "bcstage/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <system_error>

#include <opencv2/imgproc.hpp>

#include "bcstage/core/error.hpp"
#include "bcstage/data/image.hpp"
#include "bcstage/util/rng.hpp"

namespace bcstage::data {
namespace {

struct Blob {
  double cx;
  double cy;
  double radius;  // bounding radius (major semi-axis)
};

std::string padded(std::string_view prefix, std::size_t value, std::size_t width) {
  const std::string digits = std::to_string(value);
  return std::string(prefix) + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

int clamp_byte(int v) { return std::clamp(v, 0, 255); }

// Light pink "tissue" with a smooth gradient and per-pixel grain, plus dark
// purple non-overlapping elliptical "nuclei".
RgbImage render_slide(Stage stage, int size, Rng& rng) {
  RgbImage image;
  image.pixels.create(size, size, CV_8UC3);

  const double gx = rng.uniform(-12.0, 12.0);
  const double gy = rng.uniform(-12.0, 12.0);
  const int base_r = static_cast<int>(rng.between(222, 238));
  const int base_g = static_cast<int>(rng.between(188, 204));
  const int base_b = static_cast<int>(rng.between(206, 222));
  for (int y = 0; y < size; ++y) {
    auto* row = image.pixels.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      const double shade = gx * (x / static_cast<double>(size) - 0.5) + gy * (y / static_cast<double>(size) - 0.5);
      const int grain = static_cast<int>(rng.between(-10, 10));
      row[x] = cv::Vec3b(static_cast<uchar>(clamp_byte(base_r + static_cast<int>(shade) + grain)),
                         static_cast<uchar>(clamp_byte(base_g + static_cast<int>(shade) + grain)),
                         static_cast<uchar>(clamp_byte(base_b + static_cast<int>(shade) + grain)));
    }
  }

  const int wanted = rng.poisson(blob_rate(stage));
  std::vector<Blob> placed;
  cv::Mat mask = cv::Mat::zeros(size, size, CV_8UC1);
  constexpr double kGap = 3.0;
  for (int b = 0; b < wanted; ++b) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double major = rng.uniform(4.0, 7.5);
      const double minor = major * rng.uniform(0.55, 1.0);
      const double margin = major + 2.0;
      const double cx = rng.uniform(margin, size - margin);
      const double cy = rng.uniform(margin, size - margin);
      const bool clear = std::ranges::none_of(placed, [&](const Blob& o) {
        return std::hypot(cx - o.cx, cy - o.cy) < major + o.radius + kGap;
      });
      if (!clear) continue;
      const double angle = rng.uniform(0.0, 180.0);
      cv::ellipse(mask, cv::Point(static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy))),
                  cv::Size(static_cast<int>(std::lround(major)), static_cast<int>(std::lround(minor))), angle, 0.0,
                  360.0, cv::Scalar(255), cv::FILLED, cv::LINE_8);
      placed.push_back(Blob{cx, cy, major});
      break;
    }
  }

  const int ink_r = static_cast<int>(rng.between(80, 100));
  const int ink_g = static_cast<int>(rng.between(30, 50));
  const int ink_b = static_cast<int>(rng.between(100, 124));
  for (int y = 0; y < size; ++y) {
    const auto* m = mask.ptr<uchar>(y);
    auto* row = image.pixels.ptr<cv::Vec3b>(y);
    for (int x = 0; x < size; ++x) {
      if (m[x] == 0) continue;
      const int grain = static_cast<int>(rng.between(-12, 12));
      row[x] = cv::Vec3b(static_cast<uchar>(clamp_byte(ink_r + grain)), static_cast<uchar>(clamp_byte(ink_g + grain)),
                         static_cast<uchar>(clamp_byte(ink_b + grain)));
    }
  }
  return image;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n_biopsies < static_cast<std::size_t>(Stage::kCount)) {
    throw InvalidArgumentError("synthetic dataset needs at least 5 biopsies (one per stage)");
  }
  if (slides_min < 1 || slides_max < slides_min) {
    throw InvalidArgumentError("slides per biopsy range must satisfy 1 <= min <= max");
  }
  if (!(unlabeled_fraction >= 0.0 && unlabeled_fraction <= 1.0)) {
    throw InvalidArgumentError("unlabeled fraction must lie in [0, 1]");
  }
  if (image_size < 32) {
    throw InvalidArgumentError("synthetic image size must be >= 32");
  }
}

DatasetManifest generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) {
    throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  }

  const std::size_t n = config.n_biopsies;
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());

  Rng layout(Rng::derive(config.seed, {0x6c61796f7574ULL}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  layout.shuffle(order);
  const auto n_unlabeled = static_cast<std::size_t>(std::llround(config.unlabeled_fraction * static_cast<double>(n)));
  std::vector<bool> unlabeled(n, false);
  for (std::size_t k = 0; k < n_unlabeled; ++k) unlabeled[order[k]] = true;

  DatasetManifest manifest;
  manifest.source = ManifestSource::kSynthetic;
  manifest.base_dir = out_dir;
  manifest.biopsies.reserve(n);

  std::size_t patient = 0;
  std::size_t biopsies_of_patient = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || biopsies_of_patient >= 2 || !layout.bernoulli(config.repeat_patient_probability)) {
      ++patient;
      biopsies_of_patient = 0;
    }
    ++biopsies_of_patient;

    const Stage stage(static_cast<int>(i % Stage::kCount));
    BiopsyRecord record;
    record.biopsy_id = padded("B", i + 1, width);
    record.patient_id = padded("P", patient, width);
    record.split = Split::kTrain;
    if (!unlabeled[i]) record.stage = stage;

    const auto n_slides = static_cast<int>(layout.between(config.slides_min, config.slides_max));
    for (int s = 0; s < n_slides; ++s) {
      const auto rel = std::filesystem::path("images") / (record.biopsy_id + "_" + std::to_string(s) + ".png");
      Rng pixels(Rng::derive(config.seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(s)}));
      save_png(render_slide(stage, config.image_size, pixels), out_dir / rel);
      record.slides.push_back(SlideRecord{rel.generic_string(), record.biopsy_id, rel});
    }
    manifest.biopsies.push_back(std::move(record));
  }
  manifest.validate();
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace bcstage::data
