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

#include <filesystem>

#include "bcstage/models/trainer.hpp"

namespace bcstage::models {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes weights.bin, meta.json, predictions.json and, last, hash.txt with
/// the SHA-256 of each. A directory without hash.txt is incomplete.
void save_checkpoint(const TrainedModel& trained, const std::filesystem::path& dir);

/// Throws IoError for missing files, FormatError for a version or schema
/// mismatch and CorruptionError when any file does not match hash.txt.
[[nodiscard]] TrainedModel load_checkpoint(const std::filesystem::path& dir);

/// True when load_checkpoint(dir) would succeed. Never throws.
[[nodiscard]] bool has_valid_checkpoint(const std::filesystem::path& dir) noexcept;

}  // namespace bcstage::models
