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

#include <cmath>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <ranges>
#include <span>
#include <string>

#include "bcstage/core/error.hpp"

namespace bcstage {

/// Discrete cancer stage label in {0, 1, 2, 3, 4}.
class Stage {
 public:
  static constexpr int kMin = 0;
  static constexpr int kMax = 4;
  static constexpr int kCount = kMax - kMin + 1;

  constexpr Stage() noexcept = default;

  constexpr explicit Stage(int value) : value_(static_cast<std::uint8_t>(value)) {
    if (value < kMin || value > kMax) {
      throw InvalidStageError("stage " + std::to_string(value) + " outside {0..4}");
    }
  }

  [[nodiscard]] constexpr int value() const noexcept { return value_; }

  constexpr auto operator<=>(const Stage&) const noexcept = default;

 private:
  std::uint8_t value_ = 0;
};

/// Continuous biopsy-level stage prediction in [0, 4].
class BiopsyScore {
 public:
  static constexpr double kMin = 0.0;
  static constexpr double kMax = 4.0;

  constexpr BiopsyScore() noexcept = default;

  constexpr explicit BiopsyScore(double value) : value_(value) {
    if (!(value >= kMin && value <= kMax)) {
      throw InvalidScoreError("biopsy score " + std::to_string(value) + " outside [0, 4]");
    }
  }

  [[nodiscard]] constexpr double value() const noexcept { return value_; }

  constexpr auto operator<=>(const BiopsyScore&) const noexcept = default;

 private:
  double value_ = 0.0;
};

/// A prediction paired with its ground-truth label. Unlabeled biopsies never
/// form an EvaluationPair.
struct EvaluationPair {
  BiopsyScore predicted;
  Stage actual;
};

/// Hard argmax over five class scores; ties resolve to the lowest stage.
template <std::ranges::contiguous_range R>
  requires std::floating_point<std::ranges::range_value_t<R>>
[[nodiscard]] Stage stage_from_logits(const R& logits) {
  const auto n = std::ranges::size(logits);
  if (n != static_cast<std::size_t>(Stage::kCount)) {
    throw InvalidLogitsError("expected 5 logits, got " + std::to_string(n));
  }
  int best = 0;
  auto best_value = *std::ranges::begin(logits);
  int index = 0;
  for (const auto value : logits) {
    if (!std::isfinite(value)) {
      throw InvalidLogitsError("non-finite logit at index " + std::to_string(index));
    }
    if (value > best_value) {
      best_value = value;
      best = index;
    }
    ++index;
  }
  return Stage(best);
}

/// Mean of the per-slide stages of one biopsy. The integer sum is exact, so
/// the result is independent of slide order.
[[nodiscard]] inline BiopsyScore biopsy_pcs(std::span<const Stage> slide_stages) {
  if (slide_stages.empty()) {
    throw EmptyBiopsyError("biopsy has no slides");
  }
  std::int64_t sum = 0;
  for (const Stage s : slide_stages) {
    sum += s.value();
  }
  return BiopsyScore(static_cast<double>(sum) / static_cast<double>(slide_stages.size()));
}

}  // namespace bcstage
