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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bcstage/core/ensemble.hpp"

namespace bcstage::experiment {

enum class CellStatus { kCompleted, kFailed };

[[nodiscard]] std::string_view to_string(CellStatus s) noexcept;

struct CellResult {
  std::string backbone;
  double learning_rate = 0.0;
  CellStatus status = CellStatus::kCompleted;
  std::optional<double> eval_mse;  // set for completed cells only
  int best_epoch = 0;
  /// Relative to the sweep output directory.
  std::string checkpoint;
  std::string error;
};

struct BestCell {
  std::string backbone;
  double learning_rate = 0.0;
  double eval_mse = 0.0;
};

/// Sweep grid. Cells keep sweep order: backbone-major, then learning rate.
struct ResultsTable {
  std::vector<CellResult> cells;

  /// Row minimum over completed cells per backbone, first cell on ties.
  /// Backbones without a completed cell are omitted.
  [[nodiscard]] std::vector<BestCell> best_per_model() const;
  [[nodiscard]] std::map<std::string, double> best_mses() const;
  [[nodiscard]] std::vector<std::string> backbones() const;
  [[nodiscard]] std::vector<double> learning_rates() const;
  [[nodiscard]] const CellResult* find(std::string_view backbone, double learning_rate) const noexcept;
};

struct EnsembleResult {
  EnsembleStrategy strategy = EnsembleStrategy::kAll;
  double threshold = 1.0;
  std::vector<std::string> members;
  /// Absent in select-only mode, where nothing is evaluated.
  std::optional<double> mse;
  /// Each member's MSE on the ensemble's evaluation set.
  std::map<std::string, double> member_mses;
};

struct SweepResults {
  ResultsTable table;
  std::vector<EnsembleResult> ensembles;
};

/// `{cells, best, ensembles}` with two-space indentation and stable key
/// order, so equal results serialize to equal bytes.
[[nodiscard]] std::string results_to_json(const SweepResults& results);
/// Throws FormatError on schema violations, including a `best` section that
/// disagrees with the cells.
[[nodiscard]] SweepResults results_from_json(std::string_view text);

void write_results(const SweepResults& results, const std::filesystem::path& path);
[[nodiscard]] SweepResults read_results(const std::filesystem::path& path);

}  // namespace bcstage::experiment
