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

#include "bcstage/experiment/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <optional>

#include "CLI11.hpp"
#include "bcstage/core/error.hpp"
#include "bcstage/data/synthetic.hpp"
#include "bcstage/experiment/config.hpp"
#include "bcstage/experiment/report.hpp"
#include "bcstage/experiment/stats.hpp"
#include "bcstage/experiment/sweep.hpp"

namespace bcstage::experiment {
namespace {

namespace fs = std::filesystem;

// Flags shared by the config-driven subcommands. Unset optionals leave the
// file (or default) value alone.
struct Overrides {
  std::string config;
  std::string manifest;
  std::string out;
  std::vector<std::string> backbones;
  std::vector<std::string> lrs;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> split_seed;
  std::optional<double> split_ratio;
  std::optional<double> threshold;
  std::optional<int> workers;
  std::optional<int> input_size;
  bool group_by_patient = false;
};

void add_config_flags(CLI::App* app, Overrides& o, bool training_flags) {
  app->add_option("--config", o.config, "Key-value config file");
  app->add_option("--manifest", o.manifest, "Dataset manifest CSV");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--seed", o.seed, "Training seed");
  app->add_option("--split-seed", o.split_seed, "Train/eval split seed");
  app->add_option("--split-ratio", o.split_ratio, "Train fraction of the split");
  app->add_flag("--group-by-patient", o.group_by_patient, "Keep each patient's biopsies on one side of the split");
  app->add_option("--threshold", o.threshold, "Ensemble MSE threshold");
  app->add_option("--input-size", o.input_size, "Model input size in pixels");
  if (training_flags) {
    app->add_option("--backbones", o.backbones, "Backbone ids, comma-separated")->delimiter(',');
    app->add_option("--lr", o.lrs, "Learning rates, comma-separated")->delimiter(',');
    app->add_option("--epochs", o.epochs, "Epochs per cell");
    app->add_option("--batch-size", o.batch_size, "Batch size");
    app->add_option("--workers", o.workers, "Sweep cells trained in parallel");
  }
}

SweepConfig resolve_config(const Overrides& o) {
  SweepConfig c;
  if (!o.config.empty()) {
    const fs::path path(o.config);
    apply_config(c, read_config_file(path), path.parent_path());
  }
  if (!o.manifest.empty()) c.manifest_path = o.manifest;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.backbones.empty()) c.backbones = o.backbones;
  if (!o.lrs.empty()) {
    c.learning_rates.clear();
    ConfigValues v{{"learning_rates", ""}};
    for (const auto& lr : o.lrs) v["learning_rates"] += (v["learning_rates"].empty() ? "" : ",") + lr;
    apply_config(c, v);
  }
  if (o.epochs) c.hyper.epochs = *o.epochs;
  if (o.batch_size) c.hyper.batch_size = *o.batch_size;
  if (o.seed) c.hyper.seed = *o.seed;
  if (o.split_seed) c.split_seed = *o.split_seed;
  if (o.split_ratio) c.split_ratio = *o.split_ratio;
  if (o.group_by_patient) c.group_by_patient = true;
  if (o.threshold) c.ensemble_threshold = *o.threshold;
  if (o.workers) c.workers = *o.workers;
  if (o.input_size) c.input_size = *o.input_size;
  c.validate();
  return c;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void print_stats(const DatasetStats& s, std::ostream& out) {
  out << "biopsies per stage:";
  for (std::size_t k = 0; k < s.biopsies_per_stage.size(); ++k) out << ' ' << k << '=' << s.biopsies_per_stage[k];
  out << " unlabeled=" << s.unlabeled << "\n";
  out << "totals: biopsies=" << s.biopsies << " slides=" << s.slides << " patients=" << s.patients << "\n";
  for (const auto& [name, c] : s.per_split) {
    if (c.biopsies == 0) continue;
    out << name << ": biopsies=" << c.biopsies << " labeled=" << c.labeled << " unlabeled=" << c.unlabeled
        << " patients=" << c.patients << " slides=" << c.slides << "\n";
  }
}

void print_table(const ResultsTable& t, std::ostream& out) {
  for (const auto& c : t.cells) {
    out << std::left << std::setw(16) << c.backbone << " lr " << std::setw(8) << format_lr(c.learning_rate) << ' ';
    if (c.status == CellStatus::kFailed) {
      out << "FAILED: " << c.error << "\n";
    } else {
      out << "eval MSE " << fmt(*c.eval_mse) << " (best epoch " << c.best_epoch << ")\n";
    }
  }
  for (const auto& b : t.best_per_model()) {
    out << "best " << b.backbone << ": lr " << format_lr(b.learning_rate) << ", MSE " << fmt(b.eval_mse) << "\n";
  }
}

int cmd_synth(std::size_t n, int smin, int smax, double unlabeled, int image_size, std::uint64_t seed,
              const std::string& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw UsageError("synth requires --out");
  data::SyntheticConfig cfg;
  cfg.n_biopsies = n;
  cfg.slides_min = smin;
  cfg.slides_max = smax;
  cfg.unlabeled_fraction = unlabeled;
  cfg.image_size = image_size;
  cfg.seed = seed;
  try {
    cfg.validate();
  } catch (const InvalidArgumentError& e) {
    throw UsageError(e.what());
  }
  const auto m = data::generate_synthetic(cfg, out_dir);
  out << "wrote " << m.biopsies.size() << " biopsies (" << m.slide_count() << " slides) to "
      << (fs::path(out_dir) / "manifest.csv").string() << "\n";
  return kExitOk;
}

int cmd_stats(const Overrides& o, bool split, std::ostream& out) {
  auto c = resolve_config(o);
  if (c.manifest_path.empty()) throw UsageError("stats requires --manifest or a config with 'manifest'");
  auto manifest = data::load_manifest(c.manifest_path);
  if (split) manifest = assign_splits(manifest, c.split_options());
  const auto s = dataset_stats(manifest);
  print_stats(s, out);
  if (!o.out.empty()) {
    for (const auto& p : render_stats(s, o.out)) out << "wrote " << p.string() << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const Overrides& o, std::ostream& out) {
  const auto c = resolve_config(o);
  if (c.manifest_path.empty()) throw UsageError("sweep requires --manifest or a config with 'manifest'");
  RunLog log(c.output_dir / "run.log.jsonl");
  const auto outcome = run_sweep(c, log);
  print_table(outcome.results.table, out);
  out << outcome.trained << " trained, " << outcome.resumed << " resumed, " << outcome.failed << " failed; results in "
      << (c.output_dir / "results.json").string() << "\n";
  if (outcome.failed == outcome.results.table.cells.size()) throw Error("every sweep cell failed");
  return kExitOk;
}

int cmd_ensemble(const Overrides& o, const std::string& strategy_text, const std::string& results_arg,
                 bool select_only, std::ostream& out) {
  const auto c = resolve_config(o);
  std::vector<EnsembleStrategy> strategies;
  if (strategy_text == "both") {
    strategies = {EnsembleStrategy::kAll, EnsembleStrategy::kBelowThreshold};
  } else if (const auto s = parse_strategy(strategy_text)) {
    strategies = {*s};
  } else {
    throw UsageError("unknown strategy '" + strategy_text + "' (use all, below_threshold or both)");
  }
  const fs::path results_path = results_arg.empty() ? c.output_dir / "results.json" : fs::path(results_arg);
  auto results = read_results(results_path);

  std::vector<EnsembleResult> evaluated;
  if (select_only) {
    for (const auto s : strategies) evaluated.push_back(select_ensemble(results.table, s, c.ensemble_threshold));
  } else {
    const auto data = prepare_data(c);
    for (const auto s : strategies) {
      evaluated.push_back(run_ensemble(c, results.table, s, c.ensemble_threshold, data.eval));
    }
  }
  for (const auto& e : evaluated) {
    out << to_string(e.strategy) << " (threshold " << fmt(e.threshold) << "): " << e.members.size() << " members [";
    for (std::size_t i = 0; i < e.members.size(); ++i) out << (i ? ", " : "") << e.members[i];
    out << "]";
    if (e.mse) out << " ensemble MSE " << fmt(*e.mse);
    out << "\n";
  }
  if (!select_only) {
    results.ensembles = evaluated;
    write_results(results, results_path);
    RunLog log(c.output_dir / "run.log.jsonl");
    for (const auto& e : evaluated) {
      log.write({"ensemble", {}, {}, {}, e.mse, std::string(to_string(e.strategy))});
    }
  }
  return kExitOk;
}

int cmd_report(const Overrides& o, const std::string& results_arg, const std::string& report_dir, std::ostream& out) {
  const auto c = resolve_config(o);
  const fs::path results_path = results_arg.empty() ? c.output_dir / "results.json" : fs::path(results_arg);
  const auto results = read_results(results_path);
  std::optional<DatasetStats> stats;
  if (!c.manifest_path.empty()) {
    stats = dataset_stats(assign_splits(data::load_manifest(c.manifest_path), c.split_options()));
  }
  const fs::path dir = report_dir.empty() ? c.output_dir / "report" : fs::path(report_dir);
  for (const auto& p : render_report(results, stats, dir)) out << "wrote " << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cancer stage prediction from biopsy slides: sweeps, ensembles and reports", "bcstage"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic stage-correlated slide dataset");
  std::size_t n_biopsies = 200;
  int slides_min = 2;
  int slides_max = 4;
  double unlabeled = 0.1;
  int image_size = 256;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-biopsies", n_biopsies, "Number of biopsies");
  synth->add_option("--slides-min", slides_min, "Minimum slides per biopsy");
  synth->add_option("--slides-max", slides_max, "Maximum slides per biopsy");
  synth->add_option("--unlabeled-fraction", unlabeled, "Fraction of biopsies without a stage");
  synth->add_option("--image-size", image_size, "Slide width and height in pixels");
  synth->add_option("--seed", synth_seed, "Generator seed");

  Overrides stats_o, sweep_o, ens_o, report_o;
  auto* stats = app.add_subcommand("stats", "Dataset statistics per stage and split");
  add_config_flags(stats, stats_o, false);
  bool stats_split = false;
  stats->add_flag("--split", stats_split, "Assign train/eval splits as a sweep would before counting");

  auto* sweep = app.add_subcommand("sweep", "Train every backbone at every learning rate");
  add_config_flags(sweep, sweep_o, true);

  auto* ensemble = app.add_subcommand("ensemble", "Build and evaluate deep ensembles from a sweep");
  add_config_flags(ensemble, ens_o, false);
  std::string strategy = "both";
  std::string ens_results;
  bool select_only = false;
  ensemble->add_option("--strategy", strategy, "all, below_threshold or both");
  ensemble->add_option("--results", ens_results, "Results JSON (default <out>/results.json)");
  ensemble->add_flag("--select-only", select_only, "Only report the selected members; load no models");

  auto* report = app.add_subcommand("report", "Render markdown, CSV and chart reports");
  add_config_flags(report, report_o, false);
  std::string report_results;
  std::string report_dir;
  report->add_option("--results", report_results, "Results JSON (default <out>/results.json)");
  report->add_option("--report-dir", report_dir, "Report directory (default <out>/report)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'bcstage --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(n_biopsies, slides_min, slides_max, unlabeled, image_size, synth_seed, synth_out, out);
    }
    if (stats->parsed()) return cmd_stats(stats_o, stats_split, out);
    if (sweep->parsed()) return cmd_sweep(sweep_o, out);
    if (ensemble->parsed()) return cmd_ensemble(ens_o, strategy, ens_results, select_only, out);
    if (report->parsed()) return cmd_report(report_o, report_results, report_dir, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace bcstage::experiment
