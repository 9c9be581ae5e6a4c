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

#include <cstdint>
#include <string>
#include <vector>

#include "bcstage/data/manifest.hpp"

namespace bcstage::data {

struct SplitOptions {
  double ratio = 0.8;
  std::uint64_t seed = 0;
  /// Keep all biopsies of one patient on the same side of the split.
  bool group_by_patient = false;
};

struct SplitResult {
  DatasetManifest train;
  DatasetManifest eval;
  std::vector<std::string> warnings;
};

/// Seeded, stage-stratified train/eval partition at biopsy granularity.
///
/// round(ratio * N) units go to TRAIN. The train quota is apportioned over
/// stage strata by largest remainder so each stage splits as close to
/// `ratio` as integer counts allow. A stratum with fewer than two units is
/// placed wholly in TRAIN and reported in `warnings`. Both outputs keep the
/// input order of biopsies.
[[nodiscard]] SplitResult split_train_eval(const DatasetManifest& manifest, const SplitOptions& options);

}  // namespace bcstage::data
