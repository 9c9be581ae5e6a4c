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

#include <fstream>
#include <sstream>

#include "bcstage/core/error.hpp"
#include "bcstage/data/image.hpp"
#include "bcstage/data/preprocess.hpp"
#include "bcstage/data/synthetic.hpp"
#include "support/image_oracles.hpp"
#include "support/oracles.hpp"

namespace bcstage::data {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(SyntheticTest, SeededRunsAreByteIdentical) {
  const auto a = testing::scratch_dir("synth_a");
  const auto b = testing::scratch_dir("synth_b");
  SyntheticConfig cfg;
  cfg.n_biopsies = 5;
  cfg.slides_min = cfg.slides_max = 1;
  cfg.seed = 7;
  const auto ma = generate_synthetic(cfg, a);
  const auto mb = generate_synthetic(cfg, b);
  EXPECT_EQ(slurp(a / "manifest.csv"), slurp(b / "manifest.csv"));
  ASSERT_EQ(ma.biopsies.size(), 5u);
  for (const auto& bio : ma.biopsies) {
    for (const auto& s : bio.slides) {
      const auto bytes = slurp(a / s.image_path);
      EXPECT_FALSE(bytes.empty());
      EXPECT_EQ(bytes, slurp(b / s.image_path)) << s.slide_id;
    }
  }
  EXPECT_EQ(ma.source, ManifestSource::kSynthetic);
}

TEST(SyntheticTest, LayoutCountsAndValidation) {
  const auto dir = testing::scratch_dir("synth_layout");
  SyntheticConfig cfg;
  cfg.n_biopsies = 50;
  cfg.slides_min = 1;
  cfg.slides_max = 3;
  cfg.seed = 11;
  cfg.image_size = 64;
  const auto m = generate_synthetic(cfg, dir);
  ASSERT_EQ(m.biopsies.size(), 50u);
  int unlabeled = 0;
  for (std::size_t i = 0; i < m.biopsies.size(); ++i) {
    const auto& b = m.biopsies[i];
    if (!b.stage) {
      ++unlabeled;
    } else {
      EXPECT_EQ(b.stage->value(), static_cast<int>(i % 5));
    }
    EXPECT_GE(b.slides.size(), 1u);
    EXPECT_LE(b.slides.size(), 3u);
    for (std::size_t s = 0; s < b.slides.size(); ++s) {
      EXPECT_EQ(b.slides[s].image_path, std::filesystem::path("images") / (b.biopsy_id + "_" + std::to_string(s) + ".png"));
      EXPECT_TRUE(std::filesystem::exists(dir / b.slides[s].image_path));
    }
  }
  EXPECT_EQ(unlabeled, 5);

  // The emitted manifest loads back unmodified.
  const auto reloaded = load_manifest(dir / "manifest.csv");
  EXPECT_EQ(format_manifest(reloaded), format_manifest(m));
  EXPECT_EQ(slurp(dir / "manifest.csv"), format_manifest(m));
  const auto img = load_rgb(reloaded.resolve(reloaded.biopsies[0].slides[0]));
  EXPECT_EQ(img.width(), 64);
  EXPECT_EQ(img.height(), 64);
}

// Oracle: connected-component count of dark pixels. Blobs are generated
// non-overlapping, so components estimate the Poisson draws directly.
TEST(SyntheticTest, BlobCountTracksStage) {
  const auto dir = testing::scratch_dir("synth_blobs");
  SyntheticConfig cfg;
  cfg.n_biopsies = 100;  // 20 biopsies per stage
  cfg.slides_min = cfg.slides_max = 1;
  cfg.unlabeled_fraction = 0.0;
  cfg.seed = 3;
  const auto m = generate_synthetic(cfg, dir);
  std::array<double, 5> mean_count{};
  for (const auto& b : m.biopsies) {
    const auto img = load_rgb(m.resolve(b.slides[0]));
    mean_count[b.stage->value()] += testing::count_dark_blobs(img.pixels) / 20.0;
  }
  for (int s = 1; s < 5; ++s) EXPECT_GT(mean_count[s], mean_count[s - 1]);
  const double ratio = mean_count[4] / mean_count[0];
  EXPECT_NEAR(ratio, 9.0, 2.0) << "stage0 " << mean_count[0] << " stage4 " << mean_count[4];
  EXPECT_NEAR(mean_count[2], 25.0, 3.0);
}

// Statistics oracle: normalization constants estimated from the corpus
// centre the preprocessed output.
TEST(SyntheticTest, CorpusStatisticsCentreEvalOutput) {
  const auto dir = testing::scratch_dir("synth_stats");
  SyntheticConfig cfg;
  cfg.n_biopsies = 10;
  cfg.slides_min = cfg.slides_max = 1;
  cfg.seed = 21;
  cfg.image_size = 512;
  const auto m = generate_synthetic(cfg, dir);
  std::array<double, 3> sum{};
  std::array<double, 3> sq{};
  double count = 0;
  for (const auto& b : m.biopsies) {
    const auto img = load_rgb(m.resolve(b.slides[0]));
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const auto& p = img.pixels.at<cv::Vec3b>(y, x);
        for (int c = 0; c < 3; ++c) {
          sum[c] += p[c] / 255.0;
          sq[c] += (p[c] / 255.0) * (p[c] / 255.0);
        }
        ++count;
      }
  }
  PreprocessConfig pc;
  for (int c = 0; c < 3; ++c) {
    const double mu = sum[c] / count;
    pc.mean[c] = static_cast<float>(mu);
    pc.std[c] = static_cast<float>(std::sqrt(sq[c] / count - mu * mu));
  }
  const std::size_t plane = 224u * 224u;
  auto channel_means = [&](const Sample& s) {
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < plane; ++i) out[c] += s.values[c * plane + i];
      out[c] /= static_cast<double>(plane);
    }
    return out;
  };
  // A mid-stage slide sits near the corpus centre...
  const auto typical = channel_means(preprocess_eval(load_rgb(m.resolve(m.biopsies[2].slides[0])), pc));
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(typical[c], 0.0, 0.5) << "channel " << c;
  // ...and the corpus as a whole is centred up to resampling error.
  std::array<double, 3> overall{};
  for (const auto& b : m.biopsies) {
    const auto means = channel_means(preprocess_eval(load_rgb(m.resolve(b.slides[0])), pc));
    for (int c = 0; c < 3; ++c) overall[c] += means[c] / static_cast<double>(m.biopsies.size());
  }
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(overall[c], 0.0, 0.05) << "channel " << c;
}

TEST(SyntheticTest, RejectsInvalidConfigs) {
  const auto dir = testing::scratch_dir("synth_bad");
  SyntheticConfig cfg;
  cfg.n_biopsies = 4;
  EXPECT_THROW((void)generate_synthetic(cfg, dir), InvalidArgumentError);
  cfg = {};
  cfg.slides_min = 0;
  EXPECT_THROW((void)generate_synthetic(cfg, dir), InvalidArgumentError);
}

TEST(SyntheticTest, UnwritableOutputIsIoError) {
  const auto dir = testing::scratch_dir("synth_ro");
  std::ofstream(dir / "blocker") << "x";
  SyntheticConfig cfg;
  cfg.n_biopsies = 5;
  EXPECT_THROW((void)generate_synthetic(cfg, dir / "blocker" / "out"), IoError);
}

}  // namespace
}  // namespace bcstage::data
