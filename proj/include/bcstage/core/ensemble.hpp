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

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcstage/core/stage.hpp"

namespace bcstage {

enum class EnsembleStrategy { kAll, kBelowThreshold };

[[nodiscard]] inline std::string_view to_string(EnsembleStrategy s) noexcept {
  return s == EnsembleStrategy::kAll ? "all" : "below_threshold";
}

[[nodiscard]] inline std::optional<EnsembleStrategy> parse_strategy(std::string_view text) {
  if (text == "all" || text == "ALL") return EnsembleStrategy::kAll;
  if (text == "below_threshold" || text == "BELOW_THRESHOLD" || text == "below") {
    return EnsembleStrategy::kBelowThreshold;
  }
  return std::nullopt;
}

struct EnsembleSpec {
  std::vector<std::string> member_ids;
  EnsembleStrategy strategy = EnsembleStrategy::kAll;
  double threshold = 1.0;

  /// Checks the invariants required before the spec drives a prediction.
  void validate_for_prediction() const {
    if (member_ids.empty()) {
      throw EmptyEnsembleError("ensemble has no members");
    }
    if (strategy == EnsembleStrategy::kBelowThreshold && !(threshold > 0.0)) {
      throw InvalidArgumentError("ensemble threshold must be > 0");
    }
  }
};

/// Uniform mean of member biopsy scores. Values are summed in ascending order
/// so any permutation of the same multiset gives a bit-identical result.
/// Offsets are taken from the smallest score, which makes a mean of equal
/// scores exact; the result is clamped to [min, max] of the members.
[[nodiscard]] inline BiopsyScore ensemble_pcs(std::span<const BiopsyScore> member_scores) {
  if (member_scores.empty()) {
    throw EmptyEnsembleError("ensemble over zero members");
  }
  std::vector<double> values;
  values.reserve(member_scores.size());
  for (const auto& s : member_scores) values.push_back(s.value());
  std::ranges::sort(values);
  const double lo = values.front();
  const double hi = values.back();
  double offset = 0.0;
  for (const double v : values) offset += v - lo;
  const double mean = lo + offset / static_cast<double>(values.size());
  return BiopsyScore(std::clamp(mean, lo, hi));
}

[[nodiscard]] inline BiopsyScore ensemble_pcs(const std::map<std::string, BiopsyScore>& by_member) {
  std::vector<BiopsyScore> scores;
  scores.reserve(by_member.size());
  for (const auto& [id, score] : by_member) scores.push_back(score);
  return ensemble_pcs(scores);
}

/// Picks ensemble members from their evaluation MSEs. BELOW_THRESHOLD keeps
/// ids whose MSE is strictly below the threshold. Output is sorted by id and
/// may be empty; callers decide how to report that.
[[nodiscard]] inline std::vector<std::string> select_members(
    const std::map<std::string, double>& model_mses, const EnsembleSpec& spec) {
  if (std::isnan(spec.threshold)) {
    throw InvalidArgumentError("ensemble threshold is NaN");
  }
  std::vector<std::string> selected;
  for (const auto& [id, value] : model_mses) {
    if (!std::isfinite(value) || value < 0.0) {
      throw InvalidArgumentError("model '" + id + "' has invalid MSE " + std::to_string(value));
    }
    if (spec.strategy == EnsembleStrategy::kAll || value < spec.threshold) {
      selected.push_back(id);
    }
  }
  return selected;  // std::map iteration is already id-sorted
}

}  // namespace bcstage
