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

#include <span>

#include "bcstage/core/stage.hpp"

namespace bcstage {

/// Mean squared error between continuous biopsy scores and integer stages.
[[nodiscard]] inline double mse(std::span<const EvaluationPair> pairs) {
  if (pairs.empty()) {
    throw EmptyEvaluationError("mse over zero evaluation pairs");
  }
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double r = p.predicted.value() - static_cast<double>(p.actual.value());
    sum += r * r;
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace bcstage
