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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bcstage/data/manifest.hpp"
#include "bcstage/experiment/config.hpp"
#include "bcstage/experiment/results.hpp"
#include "bcstage/experiment/run_log.hpp"
#include "bcstage/models/predict.hpp"

namespace bcstage::experiment {

/// The manifest after pooling every row, imputing unlabeled biopsies and
/// re-splitting. Recorded split columns are ignored.
struct PreparedData {
  data::DatasetManifest pooled;
  data::DatasetManifest train;
  data::DatasetManifest eval;
  std::size_t imputed = 0;
  std::vector<std::string> warnings;
};

[[nodiscard]] PreparedData prepare_data(const data::DatasetManifest& manifest, const SweepConfig& config);
[[nodiscard]] PreparedData prepare_data(const SweepConfig& config);

/// `checkpoints/<backbone>/lr_<lr>`, relative to the output directory.
[[nodiscard]] std::filesystem::path cell_checkpoint_dir(std::string_view backbone, double learning_rate);

struct SweepOutcome {
  SweepResults results;
  std::size_t trained = 0;
  std::size_t resumed = 0;
  std::size_t failed = 0;
};

/// Trains every (backbone, lr) cell and writes `<out>/results.json` after
/// each finished cell. A cell whose checkpoint is valid and was produced by
/// the same settings on the same eval split is reused without training. A
/// failing cell is recorded with status "failed" and the sweep moves on.
/// Existing ensembles in results.json are dropped, since they may no longer
/// match the cells.
[[nodiscard]] SweepOutcome run_sweep(const SweepConfig& config, RunLog& log);

/// Picks members from best-per-model MSEs without loading any model.
/// Throws NoMembersError when nothing qualifies.
[[nodiscard]] EnsembleResult select_ensemble(const ResultsTable& table, EnsembleStrategy strategy, double threshold);

struct EnsembleEvaluation {
  std::vector<std::string> biopsy_ids;
  std::vector<BiopsyScore> scores;
  double mse = 0.0;
  std::map<std::string, double> member_mses;
};

/// Averages member biopsy scores per biopsy. Every member must cover the
/// same labeled biopsies in the same order (InputError otherwise).
[[nodiscard]] EnsembleEvaluation evaluate_ensemble(
    const std::map<std::string, std::vector<models::PredictionRecord>>& member_predictions);

/// Loads each selected backbone's best-lr checkpoint, predicts the eval
/// split and evaluates the ensemble.
[[nodiscard]] EnsembleResult run_ensemble(const SweepConfig& config, const ResultsTable& table,
                                          EnsembleStrategy strategy, double threshold,
                                          const data::DatasetManifest& eval_set);

}  // namespace bcstage::experiment
