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

#include <array>
#include <cstddef>
#include <map>
#include <string>

#include "bcstage/data/manifest.hpp"
#include "bcstage/data/split.hpp"

namespace bcstage::experiment {

struct SplitCounts {
  std::size_t biopsies = 0;
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t patients = 0;
  std::size_t slides = 0;
};

/// Dataset overview: biopsies per stage, labeled vs unlabeled, patients and
/// slides, each broken down by split.
struct DatasetStats {
  /// Labeled biopsies only; unlabeled ones are counted separately.
  std::array<std::size_t, 5> biopsies_per_stage{};
  std::size_t unlabeled = 0;
  std::size_t biopsies = 0;
  std::size_t slides = 0;
  std::size_t patients = 0;
  /// Patients with biopsies in more than one split. Zero when the split
  /// groups by patient, in which case patients per split sum to `patients`.
  std::size_t patients_in_several_splits = 0;
  /// Keyed by split name ("train", "eval", "test", "unassigned"); every
  /// split is present, possibly with zero counts.
  std::map<std::string, SplitCounts> per_split;
};

/// Counts the manifest as is, using each biopsy's recorded split.
[[nodiscard]] DatasetStats dataset_stats(const data::DatasetManifest& manifest);

/// Assigns splits the way a sweep does (impute a copy, stratified split)
/// while keeping the original labels, so unlabeled counts stay visible.
[[nodiscard]] data::DatasetManifest assign_splits(const data::DatasetManifest& manifest,
                                                  const data::SplitOptions& options);

}  // namespace bcstage::experiment
