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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pretrained shape checks without local weights print SKIP.

#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bcstage/core/ensemble.hpp"
#include "bcstage/core/error.hpp"
#include "bcstage/core/metrics.hpp"
#include "bcstage/core/stage.hpp"
#include "bcstage/data/preprocess.hpp"
#include "bcstage/data/synthetic.hpp"
#include "bcstage/experiment/cli.hpp"
#include "bcstage/experiment/results.hpp"
#include "bcstage/experiment/sweep.hpp"
#include "bcstage/models/predict.hpp"
#include "bcstage/models/registry.hpp"
#include "bcstage/models/trainer.hpp"
#include "support/gradient_check.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace bcstage;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  failures += !v.pass;
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  return experiment::cli_dispatch(args, out, std::cerr);
}

Verdict aggregation_oracle() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> count(1, 16), stage(0, 4);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int b = 0; b < 1000; ++b) {
    std::vector<int> raw(static_cast<std::size_t>(count(rng)));
    for (auto& s : raw) s = stage(rng);
    std::vector<Stage> stages(raw.begin(), raw.end());
    worst = std::max(worst, std::abs(biopsy_pcs(stages).value() - testing::brute_force_mean(raw)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0, fmt("1000 biopsies, max |diff| %.3g, %.3f s", worst, secs)};
}

Verdict metric_identities() {
  const std::vector<EvaluationPair> a{{BiopsyScore(2.0), Stage(2)}};
  const std::vector<EvaluationPair> b{{BiopsyScore(0.5), Stage(1)}, {BiopsyScore(3.5), Stage(3)}};
  const bool fixtures = mse(a) == 0.0 && mse(b) == 0.25;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> score(0.0, 4.0);
  std::uniform_int_distribution<int> stage(0, 4), size(1, 200);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<EvaluationPair> pairs;
    std::vector<double> p;
    std::vector<int> y;
    for (int k = size(rng); k > 0; --k) {
      p.push_back(score(rng));
      y.push_back(stage(rng));
      pairs.push_back({BiopsyScore(p.back()), Stage(y.back())});
    }
    worst = std::max(worst, std::abs(mse(pairs) - testing::two_pass_mse(p, y)));
  }
  return {fixtures && worst <= 1e-12,
          std::string(fixtures ? "fixtures exact" : "fixture mismatch") + fmt(", 100 random max |diff| %.3g", worst)};
}

Verdict jensen_bound() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(0.0, 4.0);
  std::uniform_int_distribution<int> stage(0, 4), members(2, 6), size(1, 40);
  int violations = 0, misdetected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = members(rng);
    const int n = size(rng);
    const bool agree = trial % 2 == 0;
    std::vector<int> y(n);
    for (auto& v : y) v = stage(rng);
    std::vector<std::vector<double>> preds(k, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
      const double base = score(rng);
      for (int m = 0; m < k; ++m) preds[m][i] = base;
    }
    if (!agree) {
      // one member departs from the rest on a single biopsy
      const int i = static_cast<int>(rng() % n);
      preds[rng() % k][i] = std::fmod(preds[0][i] + 0.01 + score(rng) * 0.9, 4.0);
    }
    std::vector<EvaluationPair> pairs;
    for (int i = 0; i < n; ++i) {
      std::vector<BiopsyScore> s;
      for (int m = 0; m < k; ++m) s.emplace_back(preds[m][i]);
      pairs.push_back({ensemble_pcs(s), Stage(y[i])});
    }
    const double e = mse(pairs);
    double mean = 0.0;
    for (int m = 0; m < k; ++m) mean += testing::two_pass_mse(preds[m], y) / k;
    violations += e > mean + 1e-12;
    const bool equal = mean - e <= 1e-12;
    misdetected += equal != agree;
  }
  return {violations == 0 && misdetected == 0,
          fmt("1000 instances, %g bound violations, %g equality misdetections", violations, misdetected)};
}

Verdict reference_selection(const fs::path& fixture) {
  const auto results = experiment::read_results(fixture);
  const auto e = experiment::select_ensemble(results.table, EnsembleStrategy::kBelowThreshold, 1.0);
  const std::vector<std::string> expected{"convnext_base", "efficientnet_m", "maxvit", "regnet_x32gf",
                                          "resnet50",      "swin_b",         "vgg",    "wide_resnet101"};
  std::string members;
  for (const auto& m : e.members) members += (members.empty() ? "" : ",") + m;
  return {e.members == expected, std::to_string(e.members.size()) + " members [" + members + "]"};
}

struct EndToEnd {
  fs::path data;
  fs::path out;
  double seconds = 0.0;
  int synth_code = -1;
  int sweep_code = -1;
};

EndToEnd run_end_to_end(const fs::path& root) {
  EndToEnd r{root / "data", root / "out"};
  const auto t0 = Clock::now();
  r.synth_code = run_cli({"synth", "--out", r.data.string(), "--n-biopsies", "200", "--slides-min", "2",
                          "--slides-max", "4", "--seed", "2026"});
  if (r.synth_code == 0) {
    r.sweep_code = run_cli({"sweep", "--manifest", (r.data / "manifest.csv").string(), "--out", r.out.string(),
                            "--backbones", "tiny_test_cnn", "--lr", "1e-4,1e-5,4e-4", "--epochs", "5",
                            "--batch-size", "32", "--seed", "0"});
  }
  r.seconds = seconds_since(t0);
  return r;
}

experiment::SweepConfig e2e_config(const EndToEnd& run) {
  experiment::SweepConfig c;
  c.manifest_path = run.data / "manifest.csv";
  c.backbones = {"tiny_test_cnn"};
  c.hyper.epochs = 5;
  c.hyper.batch_size = 32;
  c.output_dir = run.out;
  return c;
}

Verdict synthetic_end_to_end(const EndToEnd& run) {
  if (run.synth_code != 0 || run.sweep_code != 0) {
    return {false, "cli exit codes synth=" + std::to_string(run.synth_code) + " sweep=" + std::to_string(run.sweep_code)};
  }
  const auto results = experiment::read_results(run.out / "results.json");
  bool finite = true;
  std::size_t completed = 0;
  for (const auto& c : results.table.cells) {
    if (c.status != experiment::CellStatus::kCompleted) continue;
    ++completed;
    finite = finite && c.eval_mse && std::isfinite(*c.eval_mse);
  }
  const auto prepared = experiment::prepare_data(e2e_config(run));
  std::vector<int> labels;
  for (const auto& b : prepared.eval.biopsies) labels.push_back(b.stage->value());
  const double baseline = testing::constant_predictor_baseline(labels);
  const auto best = results.table.best_per_model();
  const double best_mse = best.empty() ? INFINITY : best.front().eval_mse;
  const double gain = 1.0 - best_mse / baseline;
  std::ostringstream d;
  d << completed << "/" << results.table.cells.size() << " cells completed, best "
    << (best.empty() ? std::string("none") : experiment::format_lr(best.front().learning_rate))
    << fmt(" MSE %.4f vs baseline %.4f (%.1f%% better)", best_mse, baseline, 100 * gain)
    << fmt(", %.1f s", run.seconds);
  return {completed > 0 && finite && gain >= 0.10 && run.seconds < 600.0, d.str()};
}

Verdict ensemble_end_to_end(const EndToEnd& run) {
  const auto prepared = experiment::prepare_data(e2e_config(run));
  data::PreprocessConfig pre;
  std::map<std::string, std::vector<models::PredictionRecord>> preds;
  for (const std::uint64_t seed : {1, 2, 3}) {
    models::ModelSpec spec{"tiny_test_cnn", 4e-4};
    models::BuildOptions build;
    build.seed = seed;
    models::TrainHyperparams hyper;
    hyper.epochs = 5;
    hyper.seed = seed;
    models::TrainOptions options;
    options.preprocess = pre;
    auto trained = models::train(models::build_model(spec, build), prepared.train, prepared.eval, hyper, options);
    preds["seed" + std::to_string(seed)] = std::move(trained.eval_predictions);
  }
  const auto all = experiment::evaluate_ensemble(preds);
  std::vector<double> mses;
  for (const auto& [id, m] : all.member_mses) mses.push_back(m);
  std::ranges::sort(mses);
  const double threshold = mses[1];
  EnsembleSpec spec{{}, EnsembleStrategy::kBelowThreshold, threshold};
  const auto members = select_members(all.member_mses, spec);
  std::ostringstream d;
  d << fmt("member MSEs %.4f/%.4f/%.4f", mses[0], mses[1], mses[2]) << ", threshold " << threshold << ", "
    << members.size() << " selected";
  if (members.empty() || members.size() >= preds.size()) {
    d << " (not a strict non-empty subset)";
    return {false, d.str()};
  }
  std::map<std::string, std::vector<models::PredictionRecord>> subset;
  for (const auto& m : members) subset[m] = preds.at(m);
  const auto below = experiment::evaluate_ensemble(subset);
  auto mean_of = [](const experiment::EnsembleEvaluation& e) {
    double s = 0.0;
    for (const auto& [id, m] : e.member_mses) s += m;
    return s / static_cast<double>(e.member_mses.size());
  };
  const bool jensen = all.mse <= mean_of(all) + 1e-12 && below.mse <= mean_of(below) + 1e-12;
  d << fmt("; all: %.4f <= %.4f; below_threshold: %.4f", all.mse, mean_of(all), below.mse)
    << fmt(" <= %.4f", mean_of(below));
  return {jensen, d.str()};
}

Verdict determinism(const EndToEnd& first, const fs::path& root) {
  const auto second = run_end_to_end(root);
  if (second.sweep_code != 0) return {false, "repeat run failed"};
  const auto a = slurp(first.out / "results.json");
  const auto b = slurp(second.out / "results.json");
  return {!a.empty() && a == b, a == b ? std::to_string(a.size()) + " bytes identical" : "results JSON differs"};
}

Verdict gradient_check(const fs::path& root) {
  data::SyntheticConfig cfg;
  cfg.n_biopsies = 6;
  cfg.image_size = 64;
  cfg.seed = 5;
  const auto m = data::generate_synthetic(cfg, root);
  data::PreprocessConfig pre;
  pre.target_size = 32;
  models::SlideSource source(m);
  std::vector<torch::Tensor> xs;
  for (const auto& b : m.biopsies) {
    const auto s = data::preprocess_eval(source.image(b.slides.front()), pre);
    xs.push_back(torch::tensor(s.values).reshape({3, 32, 32}));
  }
  const auto y = torch::tensor(std::vector<int64_t>{0, 1, 2, 3, 4, 1});
  models::BuildOptions build;
  build.seed = 7;
  build.input_size = 32;
  auto model = models::build_model({"tiny_test_cnn", 1e-3}, build);
  const auto check = testing::check_parameter_gradient(model, "head.weight", torch::stack(xs), y);
  return {check.relative_error < 1e-3 && check.numeric_norm > 0,
          fmt("head.weight relative error %.3g", check.relative_error)};
}

Verdict shape_suite() {
  int checked = 0;
  std::string bad;
  for (const auto& info : models::backbone_registry()) {
    const int size = info.fixed_input_size ? 224 : 64;
    models::BuildOptions build;
    build.input_size = size;
    for (const bool pretrained : {false, true}) {
      if (pretrained && !info.has_pretrained_source) continue;
      const std::string label = std::string(info.id) + (pretrained ? " (pretrained)" : "");
      models::StageModel model;
      try {
        model = models::build_model({std::string(info.id), 1e-4, pretrained}, build);
      } catch (const FetchError& e) {
        if (!pretrained) throw;
        std::cout << "SKIP shape " << label << ": weights unavailable" << std::endl;
        continue;
      }
      torch::NoGradGuard guard;
      model.net->eval();
      const auto out = model.net->forward(torch::randn({2, 3, size, size}));
      if (out.dim() != 2 || out.size(0) != 2 || out.size(1) != 5) bad += " " + label;
      ++checked;
    }
  }
  return {bad.empty(), std::to_string(checked) + " backbones give N x 5" + (bad.empty() ? "" : "; wrong:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <fixture-dir>\n";
    return 2;
  }
  const fs::path fixtures = argv[1];
  torch::set_num_threads(std::max(1u, std::thread::hardware_concurrency()));

  report("aggregation oracle", aggregation_oracle);
  report("metric identities", metric_identities);
  report("jensen ensemble bound", jensen_bound);
  report("reference selection", [&] { return reference_selection(fixtures / "reference_sweep_results.json"); });

  const auto e2e = run_end_to_end(testing::scratch_dir("acceptance_run1"));
  report("synthetic end-to-end", [&] { return synthetic_end_to_end(e2e); });
  report("ensemble end-to-end", [&] { return ensemble_end_to_end(e2e); });
  report("determinism", [&] { return determinism(e2e, testing::scratch_dir("acceptance_run2")); });
  report("gradient check", [&] { return gradient_check(testing::scratch_dir("acceptance_grad")); });
  report("shape suite", shape_suite);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
