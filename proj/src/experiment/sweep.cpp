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

#include "bcstage/experiment/sweep.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "bcstage/core/error.hpp"
#include "bcstage/core/metrics.hpp"
#include "bcstage/data/split.hpp"
#include "bcstage/models/checkpoint.hpp"
#include "bcstage/models/trainer.hpp"

namespace bcstage::experiment {
namespace {

struct Cell {
  std::string backbone;
  double lr;
};

std::vector<std::string> biopsy_ids(const data::DatasetManifest& m) {
  std::vector<std::string> out;
  for (const auto& b : m.biopsies) out.push_back(b.biopsy_id);
  return out;
}

// True when the checkpoint was produced by this cell's settings on this
// eval split; anything else is retrained.
bool reusable(const models::TrainedModel& t, const Cell& cell, const SweepConfig& config,
              const std::vector<std::string>& eval_ids) {
  if (t.spec().backbone_id != cell.backbone || t.spec().learning_rate != cell.lr) return false;
  if (t.spec().pretrained != config.pretrained || t.model.input_size != config.input_size) return false;
  const auto& h = t.hyper;
  if (h.batch_size != config.hyper.batch_size || h.epochs != config.hyper.epochs ||
      h.weight_decay != config.hyper.weight_decay || h.seed != config.hyper.seed) {
    return false;
  }
  if (t.eval_predictions.size() != eval_ids.size()) return false;
  for (std::size_t i = 0; i < eval_ids.size(); ++i) {
    if (t.eval_predictions[i].biopsy_id != eval_ids[i]) return false;
  }
  return true;
}

CellResult run_cell(const Cell& cell, const SweepConfig& config, const PreparedData& data,
                    const std::vector<std::string>& eval_ids, RunLog& log, bool& trained) {
  trained = false;
  CellResult result;
  result.backbone = cell.backbone;
  result.learning_rate = cell.lr;
  const auto rel = cell_checkpoint_dir(cell.backbone, cell.lr);
  result.checkpoint = rel.generic_string();
  const auto dir = config.output_dir / rel;

  if (models::has_valid_checkpoint(dir)) {
    const auto previous = models::load_checkpoint(dir);
    if (reusable(previous, cell, config, eval_ids)) {
      result.eval_mse = previous.eval_mse;
      result.best_epoch = previous.best_epoch;
      log.write({"cell_resumed", cell.backbone, cell.lr, previous.best_epoch, previous.eval_mse, {}});
      return result;
    }
    log.write({"cell_stale", cell.backbone, cell.lr, {}, {}, "checkpoint settings differ; retraining"});
  }

  log.write({"cell_start", cell.backbone, cell.lr, {}, {}, {}});
  try {
    models::ModelSpec spec;
    spec.backbone_id = cell.backbone;
    spec.learning_rate = cell.lr;
    spec.pretrained = config.pretrained;
    models::BuildOptions build;
    build.seed = config.hyper.seed;
    build.input_size = config.input_size;
    build.pretrained_dir = config.pretrained_dir;

    models::TrainOptions options;
    options.preprocess = config.preprocess();
    options.checkpoint_dir = dir;
    options.loader_threads = config.loader_threads;
    options.on_epoch = [&](const models::EpochRecord& r) {
      std::ostringstream msg;
      msg << "train_loss=" << r.train_loss;
      log.write({"epoch", cell.backbone, cell.lr, r.epoch, r.eval_mse, msg.str()});
    };
    trained = true;
    const auto t = models::train(models::build_model(spec, build), data.train, data.eval, config.hyper, options);
    result.eval_mse = t.eval_mse;
    result.best_epoch = t.best_epoch;
    log.write({"cell_done", cell.backbone, cell.lr, t.best_epoch, t.eval_mse, {}});
  } catch (const std::exception& e) {
    result.status = CellStatus::kFailed;
    result.eval_mse.reset();
    result.error = e.what();
    log.write({"cell_failed", cell.backbone, cell.lr, {}, {}, e.what()});
  }
  return result;
}

}  // namespace

PreparedData prepare_data(const data::DatasetManifest& manifest, const SweepConfig& config) {
  PreparedData out;
  auto imputed = data::impute_unlabeled(manifest);
  out.imputed = imputed.imputed;
  out.pooled = std::move(imputed.manifest);
  for (auto& b : out.pooled.biopsies) b.split = data::Split::kUnassigned;
  auto split = data::split_train_eval(out.pooled, config.split_options());
  out.train = std::move(split.train);
  out.eval = std::move(split.eval);
  out.warnings = std::move(split.warnings);
  if (out.train.biopsies.empty() || out.eval.biopsies.empty()) {
    throw ConfigError("split produced an empty train or eval set; the manifest is too small");
  }
  return out;
}

PreparedData prepare_data(const SweepConfig& config) {
  if (config.manifest_path.empty()) throw ConfigError("no manifest configured");
  return prepare_data(data::load_manifest(config.manifest_path), config);
}

std::filesystem::path cell_checkpoint_dir(std::string_view backbone, double learning_rate) {
  return std::filesystem::path("checkpoints") / std::string(backbone) / ("lr_" + format_lr(learning_rate));
}

SweepOutcome run_sweep(const SweepConfig& input, RunLog& log) {
  auto config = input;
  config.validate();
  const auto data = prepare_data(config);
  const auto eval_ids = biopsy_ids(data.eval);
  std::filesystem::create_directories(config.output_dir);
  const auto results_path = config.output_dir / "results.json";

  std::vector<Cell> cells;
  for (const auto& b : config.backbones) {
    for (const double lr : config.learning_rates) cells.push_back({b, lr});
  }
  log.write({"sweep_start", {}, {}, {}, {},
             std::to_string(cells.size()) + " cells, " + std::to_string(data.train.biopsies.size()) + " train / " +
                 std::to_string(data.eval.biopsies.size()) + " eval biopsies, " + std::to_string(data.imputed) +
                 " imputed"});
  for (const auto& w : data.warnings) log.write({"split_warning", {}, {}, {}, {}, w});

  std::vector<std::optional<CellResult>> finished(cells.size());
  std::vector<char> trained_flags(cells.size(), 0);
  std::mutex writer;
  auto publish = [&] {
    SweepResults partial;
    for (const auto& r : finished) {
      if (r) partial.table.cells.push_back(*r);
    }
    write_results(partial, results_path);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      bool trained = false;
      auto r = run_cell(cells[i], config, data, eval_ids, log, trained);
      const std::lock_guard lock(writer);
      finished[i] = std::move(r);
      trained_flags[i] = trained ? 1 : 0;
      publish();
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers), cells.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  }

  SweepOutcome outcome;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& r = *finished[i];
    if (r.status == CellStatus::kFailed) {
      ++outcome.failed;
    } else if (trained_flags[i]) {
      ++outcome.trained;
    } else {
      ++outcome.resumed;
    }
    outcome.results.table.cells.push_back(r);
  }
  write_results(outcome.results, results_path);
  log.write({"sweep_done", {}, {}, {}, {},
             std::to_string(outcome.trained) + " trained, " + std::to_string(outcome.resumed) + " resumed, " +
                 std::to_string(outcome.failed) + " failed"});
  return outcome;
}

EnsembleResult select_ensemble(const ResultsTable& table, EnsembleStrategy strategy, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw ConfigError("ensemble threshold must be positive and finite");
  }
  EnsembleResult out;
  out.strategy = strategy;
  out.threshold = threshold;
  const auto mses = table.best_mses();
  if (mses.empty()) throw NoMembersError("no completed sweep cells to build an ensemble from");
  EnsembleSpec spec;
  spec.strategy = strategy;
  spec.threshold = threshold;
  out.members = select_members(mses, spec);
  if (out.members.empty()) {
    double lowest = mses.begin()->second;
    for (const auto& [id, v] : mses) lowest = std::min(lowest, v);
    std::ostringstream msg;
    msg << "no model has a best MSE below the threshold " << threshold << " (lowest is " << lowest
        << "); raise --threshold or use the 'all' strategy";
    throw NoMembersError(msg.str());
  }
  for (const auto& id : out.members) out.member_mses.emplace(id, mses.at(id));
  return out;
}

EnsembleEvaluation evaluate_ensemble(
    const std::map<std::string, std::vector<models::PredictionRecord>>& member_predictions) {
  if (member_predictions.empty()) throw NoMembersError("ensemble has no members");
  EnsembleEvaluation out;
  const auto& [first_id, first] = *member_predictions.begin();
  for (const auto& r : first) {
    if (r.actual) out.biopsy_ids.push_back(r.biopsy_id);
  }
  std::map<std::string, std::vector<const models::PredictionRecord*>> labeled;
  for (const auto& [id, records] : member_predictions) {
    auto& mine = labeled[id];
    for (const auto& r : records) {
      if (r.actual) mine.push_back(&r);
    }
    if (mine.size() != out.biopsy_ids.size()) {
      throw InputError("member " + id + " covers " + std::to_string(mine.size()) + " labeled biopsies, " + first_id +
                       " covers " + std::to_string(out.biopsy_ids.size()));
    }
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i]->biopsy_id != out.biopsy_ids[i] || mine[i]->actual != labeled.begin()->second[i]->actual) {
        throw InputError("member " + id + " disagrees with " + first_id + " on biopsy " + out.biopsy_ids[i]);
      }
    }
    out.member_mses.emplace(id, models::prediction_mse(records));
  }

  std::vector<EvaluationPair> pairs;
  for (std::size_t i = 0; i < out.biopsy_ids.size(); ++i) {
    std::vector<BiopsyScore> scores;
    for (const auto& [id, records] : labeled) scores.push_back(records[i]->pcs);
    out.scores.push_back(ensemble_pcs(scores));
    pairs.push_back({out.scores.back(), *labeled.begin()->second[i]->actual});
  }
  out.mse = mse(pairs);
  return out;
}

EnsembleResult run_ensemble(const SweepConfig& config, const ResultsTable& table, EnsembleStrategy strategy,
                            double threshold, const data::DatasetManifest& eval_set) {
  auto out = select_ensemble(table, strategy, threshold);
  std::map<std::string, const BestCell*> best;
  const auto best_cells = table.best_per_model();
  for (const auto& b : best_cells) best.emplace(b.backbone, &b);

  std::map<std::string, std::vector<models::PredictionRecord>> predictions;
  models::SlideSource source(eval_set);
  for (const auto& id : out.members) {
    const auto* cell = table.find(id, best.at(id)->learning_rate);
    const auto trained = models::load_checkpoint(config.output_dir / cell->checkpoint);
    predictions.emplace(id, models::predict_manifest(trained.model, eval_set, source, trained.preprocess));
  }
  const auto evaluation = evaluate_ensemble(predictions);
  out.mse = evaluation.mse;
  out.member_mses = evaluation.member_mses;
  return out;
}

}  // namespace bcstage::experiment
