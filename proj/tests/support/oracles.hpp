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

// Independent reference computations used by the unit and acceptance suites.
// None of these call into the library routines they check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace bcstage::testing {

/// Plain left-to-right mean of integer stages, accumulated in long double.
inline double brute_force_mean(const std::vector<int>& values) {
  long double sum = 0;
  for (const int v : values) sum += v;
  return static_cast<double>(sum / static_cast<long double>(values.size()));
}

/// Two-pass MSE: residuals first, then a compensated (Kahan) sum.
inline double two_pass_mse(const std::vector<double>& predicted, const std::vector<int>& actual) {
  std::vector<double> squared(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const long double r = static_cast<long double>(predicted[i]) - actual[i];
    squared[i] = static_cast<double>(r * r);
  }
  double sum = 0.0;
  double carry = 0.0;
  for (const double s : squared) {
    const double y = s - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum / static_cast<double>(squared.size());
}

/// min over constant predictions c in [0, 4] of mean (c - y)^2, evaluated by
/// dense grid search refined around the best grid point.
inline double constant_predictor_baseline(const std::vector<int>& labels) {
  auto loss = [&](double c) {
    long double s = 0;
    for (const int y : labels) s += (c - y) * (c - y);
    return static_cast<double>(s / labels.size());
  };
  double best_c = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 4000; ++k) {
    const double c = k / 1000.0;
    const double l = loss(c);
    if (l < best) {
      best = l;
      best_c = c;
    }
  }
  for (int k = -1000; k <= 1000; ++k) {
    const double c = std::clamp(best_c + k * 1e-6, 0.0, 4.0);
    best = std::min(best, loss(c));
  }
  return best;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bcstage_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace bcstage::testing
