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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcstage/core/stage.hpp"

namespace bcstage::data {

enum class Split { kTrain, kEval, kTest, kUnassigned };

[[nodiscard]] std::string_view to_string(Split split) noexcept;
[[nodiscard]] std::optional<Split> parse_split(std::string_view text) noexcept;

struct SlideRecord {
  std::string slide_id;
  std::string biopsy_id;
  /// Path exactly as written in the manifest; relative paths resolve against
  /// DatasetManifest::base_dir.
  std::filesystem::path image_path;
};

struct BiopsyRecord {
  std::string biopsy_id;
  std::string patient_id;
  std::vector<SlideRecord> slides;
  std::optional<Stage> stage;
  bool stage_imputed = false;
  Split split = Split::kUnassigned;
};

enum class ManifestSource { kReal, kSynthetic };

struct DatasetManifest {
  std::vector<BiopsyRecord> biopsies;
  ManifestSource source = ManifestSource::kReal;
  std::filesystem::path base_dir;

  [[nodiscard]] std::filesystem::path resolve(const SlideRecord& slide) const;
  [[nodiscard]] std::size_t slide_count() const noexcept;
  [[nodiscard]] const BiopsyRecord* find(std::string_view biopsy_id) const noexcept;

  /// Throws ManifestFormatError if ids are duplicated, a biopsy has no
  /// slides, or a slide points at a different parent.
  void validate() const;
};

/// Reads a `biopsy_id,patient_id,slide_path,stage,split` CSV. Rows sharing a
/// biopsy_id are grouped into one record in order of first appearance.
[[nodiscard]] DatasetManifest load_manifest(const std::filesystem::path& path);
[[nodiscard]] DatasetManifest parse_manifest(std::istream& in, std::filesystem::path base_dir,
                                             std::string_view source_name = "<manifest>");

/// Serializes one row per slide, grouped by biopsy. For input whose rows are
/// already grouped this reproduces the original bytes.
[[nodiscard]] std::string format_manifest(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct ImputationResult {
  DatasetManifest manifest;
  std::size_t imputed = 0;
};

/// Assigns `fill` (stage 1, the modal class) to every unlabeled biopsy.
[[nodiscard]] ImputationResult impute_unlabeled(DatasetManifest manifest, Stage fill = Stage(1));

}  // namespace bcstage::data
