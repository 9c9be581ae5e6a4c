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

#include "bcstage/models/trainer.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "bcstage/core/error.hpp"
#include "bcstage/models/checkpoint.hpp"
#include "bcstage/models/weights_io.hpp"
#include "bcstage/util/rng.hpp"
#include "tensor_batch.hpp"

namespace bcstage::models {
namespace {

// Stream keys for Rng::derive, kept distinct from per-sample keys.
constexpr std::uint64_t kShuffleStream = 0x5348'5546ULL;
constexpr std::uint64_t kTorchStream = 0x544f'5243ULL;

struct TrainItem {
  const data::SlideRecord* slide;
  int64_t label;
};

void require_resolved(const data::DatasetManifest& m, const char* which) {
  for (const auto& b : m.biopsies) {
    if (!b.stage) throw ConfigError(std::string(which) + " biopsy " + b.biopsy_id + " has no stage; impute first");
    if (b.slides.empty()) throw ConfigError(std::string(which) + " biopsy " + b.biopsy_id + " has no slides");
  }
}

void require_disjoint(const data::DatasetManifest& train, const data::DatasetManifest& eval) {
  std::set<std::string> ids;
  std::set<std::filesystem::path> paths;
  for (const auto& b : train.biopsies) {
    ids.insert(b.biopsy_id);
    for (const auto& s : b.slides) paths.insert(train.resolve(s).lexically_normal());
  }
  for (const auto& b : eval.biopsies) {
    if (ids.contains(b.biopsy_id)) throw ConfigError("biopsy " + b.biopsy_id + " is in both train and eval sets");
    for (const auto& s : b.slides) {
      if (paths.contains(eval.resolve(s).lexically_normal())) {
        throw ConfigError("slide image " + s.image_path.string() + " is shared by train and eval sets");
      }
    }
  }
}

std::string format_lr(double lr) {
  std::ostringstream out;
  out << lr;
  return out.str();
}

// Augments a batch with per-sample generators, so the result is the same for
// any thread count.
std::vector<data::Sample> augment_batch(const std::vector<const data::RgbImage*>& images,
                                        const std::vector<std::uint64_t>& seeds, const data::PreprocessConfig& cfg,
                                        int threads) {
  std::vector<data::Sample> out(images.size());
  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t k = first; k < images.size(); k += step) {
      Rng rng(seeds[k]);
      out[k] = data::preprocess_train(*images[k], cfg, rng);
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, threads));
  if (n == 1 || images.size() < 2) {
    work(0, 1);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, n);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<NamedTensor> snapshot(const torch::nn::Module& net) {
  auto state = collect_state(net);
  for (auto& [name, t] : state) t = t.detach().clone();
  return state;
}

}  // namespace

void TrainHyperparams::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight decay must be finite and >= 0");
}

TrainedModel train(StageModel model, const data::DatasetManifest& train_set, const data::DatasetManifest& eval_set,
                   const TrainHyperparams& hyper, const TrainOptions& options) {
  hyper.validate();
  model.spec.validate();
  options.preprocess.validate();
  if (options.preprocess.target_size != model.input_size) {
    throw ConfigError("preprocess target size " + std::to_string(options.preprocess.target_size) +
                      " does not match model input size " + std::to_string(model.input_size));
  }
  if (train_set.biopsies.empty()) throw ConfigError("train set is empty");
  if (eval_set.biopsies.empty()) throw ConfigError("eval set is empty");
  require_resolved(train_set, "train");
  require_resolved(eval_set, "eval");
  require_disjoint(train_set, eval_set);

  std::vector<TrainItem> items;
  for (const auto& b : train_set.biopsies) {
    for (const auto& s : b.slides) items.push_back({&s, b.stage->value()});
  }

  // Separate sources: the train loop can only ever reach train images.
  SlideSource train_source(train_set);
  SlideSource eval_source(eval_set);

  torch::manual_seed(Rng::derive(hyper.seed, {kTorchStream}));
  auto& net = *model.net;
  torch::optim::AdamW optimizer(
      net.parameters(), torch::optim::AdamWOptions(model.spec.learning_rate).weight_decay(hyper.weight_decay));

  TrainedModel result;
  result.hyper = hyper;
  result.preprocess = options.preprocess;
  double best = std::numeric_limits<double>::infinity();
  std::vector<NamedTensor> best_state;

  const auto batch = static_cast<std::size_t>(hyper.batch_size);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    net.train();
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng(Rng::derive(hyper.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)})).shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      std::vector<const data::RgbImage*> images(n);
      std::vector<std::uint64_t> seeds(n);
      std::vector<int64_t> labels(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto idx = order[start + k];
        images[k] = &train_source.image(*items[idx].slide);
        seeds[k] = Rng::derive(hyper.seed, {static_cast<std::uint64_t>(epoch), idx});
        labels[k] = items[idx].label;
      }
      const auto samples = augment_batch(images, seeds, options.preprocess, options.loader_threads);
      const auto x = stack_samples(samples, model.input_size);
      const auto y = torch::tensor(labels, torch::kInt64);

      optimizer.zero_grad();
      const auto loss = torch::nn::functional::cross_entropy(net.forward(x), y);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " with learning rate " +
                              format_lr(model.spec.learning_rate) + ": loss is " + std::to_string(value));
      }
      loss.backward();
      optimizer.step();
      loss_sum += value * static_cast<double>(n);
    }

    auto predictions = predict_manifest(model, eval_set, eval_source, options.preprocess);
    const EpochRecord record{epoch, loss_sum / static_cast<double>(items.size()), prediction_mse(predictions)};
    result.history.push_back(record);
    if (options.on_epoch) options.on_epoch(record);
    if (record.eval_mse < best) {
      best = record.eval_mse;
      result.best_epoch = epoch;
      result.eval_predictions = std::move(predictions);
      best_state = snapshot(net);
    }
  }

  load_state(net, best_state);
  net.eval();
  result.model = std::move(model);
  result.eval_mse = best;
  result.audit.train_reads = train_source.reads();
  result.audit.eval_reads = eval_source.reads();
  if (!options.checkpoint_dir.empty()) {
    save_checkpoint(result, options.checkpoint_dir);
    result.checkpoint_path = options.checkpoint_dir;
  }
  return result;
}

}  // namespace bcstage::models
