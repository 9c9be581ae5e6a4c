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
#include <filesystem>
#include <functional>
#include <set>
#include <vector>

#include "bcstage/data/manifest.hpp"
#include "bcstage/data/preprocess.hpp"
#include "bcstage/models/predict.hpp"
#include "bcstage/models/registry.hpp"

namespace bcstage::models {

/// Optimizer is AdamW (betas 0.9/0.999, eps 1e-8) with decoupled weight decay.
struct TrainHyperparams {
  int batch_size = 32;
  int epochs = 50;
  double weight_decay = 1e-2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double eval_mse = 0.0;
};

struct TrainingAudit {
  std::set<std::filesystem::path> train_reads;
  std::set<std::filesystem::path> eval_reads;
};

struct TrainedModel {
  StageModel model;
  TrainHyperparams hyper;
  data::PreprocessConfig preprocess;
  std::vector<EpochRecord> history;
  double eval_mse = 0.0;
  int best_epoch = 0;
  /// Eval-set predictions of the returned (best-epoch) weights.
  std::vector<PredictionRecord> eval_predictions;
  std::filesystem::path checkpoint_path;
  TrainingAudit audit;

  [[nodiscard]] const ModelSpec& spec() const noexcept { return model.spec; }
};

struct TrainOptions {
  data::PreprocessConfig preprocess;
  /// When set, the best-epoch checkpoint is written here.
  std::filesystem::path checkpoint_dir;
  /// Threads used to decode and augment a batch. Results do not depend on it.
  int loader_threads = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Cross-entropy fine-tuning on slides labelled with their biopsy's stage.
/// After every epoch the eval set is scored at biopsy level; the weights of
/// the epoch with the lowest eval MSE are returned (earliest on ties).
///
/// Throws ConfigError for an empty train or eval set, unresolved stages or
/// overlapping sets, and DivergenceError on a non-finite loss.
[[nodiscard]] TrainedModel train(StageModel model, const data::DatasetManifest& train_set,
                                 const data::DatasetManifest& eval_set, const TrainHyperparams& hyper,
                                 const TrainOptions& options = {});

}  // namespace bcstage::models
