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
#include <optional>
#include <vector>

#include "bcstage/experiment/results.hpp"
#include "bcstage/experiment/stats.hpp"

namespace bcstage::experiment {

/// Writes report.md and results.csv, plus stats.csv and one PNG per dataset
/// panel when stats are given. Output bytes depend only on the inputs.
/// Returns the written paths. Throws IoError when `out_dir` is unwritable.
std::vector<std::filesystem::path> render_report(const SweepResults& results, const std::optional<DatasetStats>& stats,
                                                 const std::filesystem::path& out_dir);

/// stats.csv and the panel PNGs only.
std::vector<std::filesystem::path> render_stats(const DatasetStats& stats, const std::filesystem::path& out_dir);

}  // namespace bcstage::experiment
