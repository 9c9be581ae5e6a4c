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

#include "bcstage/models/checkpoint.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "bcstage/core/error.hpp"
#include "bcstage/models/weights_io.hpp"
#include "json.hpp"

namespace bcstage::models {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// hash.txt lists one digest per file, in this order.
constexpr std::array<const char*, 3> kHashedFiles{"weights.bin", "meta.json", "predictions.json"};

json preprocess_to_json(const data::PreprocessConfig& p) {
  return {{"target_size", p.target_size},
          {"crop_scale_min", p.crop_scale_min},
          {"crop_scale_max", p.crop_scale_max},
          {"aspect_min", p.aspect_min},
          {"aspect_max", p.aspect_max},
          {"hflip_probability", p.hflip_probability},
          {"mean", p.mean},
          {"std", p.std}};
}

data::PreprocessConfig preprocess_from_json(const json& j) {
  data::PreprocessConfig p;
  p.target_size = j.at("target_size").get<int>();
  p.crop_scale_min = j.at("crop_scale_min").get<double>();
  p.crop_scale_max = j.at("crop_scale_max").get<double>();
  p.aspect_min = j.at("aspect_min").get<double>();
  p.aspect_max = j.at("aspect_max").get<double>();
  p.hflip_probability = j.at("hflip_probability").get<double>();
  p.mean = j.at("mean").get<std::array<float, 3>>();
  p.std = j.at("std").get<std::array<float, 3>>();
  return p;
}

json meta_to_json(const TrainedModel& t) {
  json history = json::array();
  for (const auto& e : t.history) {
    history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"eval_mse", e.eval_mse}});
  }
  const auto& spec = t.spec();
  return {{"format_version", kCheckpointFormatVersion},
          {"backbone_id", spec.backbone_id},
          {"architecture", backbone_info(spec.backbone_id).architecture},
          {"pretrained", spec.pretrained},
          {"learning_rate", spec.learning_rate},
          {"batch_size", t.hyper.batch_size},
          {"epochs", t.hyper.epochs},
          {"weight_decay", t.hyper.weight_decay},
          {"seed", t.hyper.seed},
          {"input_size", t.model.input_size},
          {"eval_mse", t.eval_mse},
          {"best_epoch", t.best_epoch},
          {"history", history},
          {"preprocess", preprocess_to_json(t.preprocess)}};
}

json predictions_to_json(const std::vector<PredictionRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    json stages = json::array();
    for (const auto s : r.slide_stages) stages.push_back(s.value());
    out.push_back({{"biopsy_id", r.biopsy_id},
                   {"slide_stages", stages},
                   {"pcs", r.pcs.value()},
                   {"actual", r.actual ? json(r.actual->value()) : json(nullptr)}});
  }
  return out;
}

std::vector<PredictionRecord> predictions_from_json(const json& j) {
  std::vector<PredictionRecord> out;
  for (const auto& item : j) {
    PredictionRecord r;
    r.biopsy_id = item.at("biopsy_id").get<std::string>();
    for (const auto& s : item.at("slide_stages")) r.slide_stages.emplace_back(s.get<int>());
    r.pcs = BiopsyScore(item.at("pcs").get<double>());
    if (!item.at("actual").is_null()) r.actual = Stage(item.at("actual").get<int>());
    out.push_back(std::move(r));
  }
  return out;
}

std::string hash_listing(const fs::path& dir) {
  std::ostringstream out;
  for (const auto* name : kHashedFiles) out << sha256_hex(read_file(dir / name)) << "  " << name << '\n';
  return out.str();
}

json parse_json(const std::string& text, const fs::path& path) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const TrainedModel& trained, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  // Invalidate any previous checkpoint before touching the other files.
  fs::remove(dir / "hash.txt", ec);

  write_file(dir / "weights.bin", encode_weights(collect_state(*trained.model.net)));
  write_file(dir / "meta.json", meta_to_json(trained).dump(2) + "\n");
  write_file(dir / "predictions.json", predictions_to_json(trained.eval_predictions).dump(2) + "\n");
  write_file(dir / "hash.txt", hash_listing(dir));
}

TrainedModel load_checkpoint(const fs::path& dir) {
  const auto recorded = read_file(dir / "hash.txt");
  const auto actual = hash_listing(dir);
  if (recorded != actual) throw CorruptionError("checkpoint " + dir.string() + " does not match hash.txt");

  const auto meta = parse_json(read_file(dir / "meta.json"), dir / "meta.json");
  const auto preds = parse_json(read_file(dir / "predictions.json"), dir / "predictions.json");
  TrainedModel t;
  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("checkpoint " + dir.string() + " has format version " + std::to_string(version) +
                        ", expected " + std::to_string(kCheckpointFormatVersion));
    }
    ModelSpec spec;
    spec.backbone_id = meta.at("backbone_id").get<std::string>();
    spec.learning_rate = meta.at("learning_rate").get<double>();
    const bool pretrained = meta.at("pretrained").get<bool>();
    if (meta.at("architecture").get<std::string>() != backbone_info(spec.backbone_id).architecture) {
      throw FormatError("checkpoint " + dir.string() + " architecture does not match backbone " + spec.backbone_id);
    }

    // The stored weights replace the initialization, so no pretrained fetch.
    BuildOptions build;
    build.input_size = meta.at("input_size").get<int>();
    t.model = build_model(spec, build);
    t.model.spec.pretrained = pretrained;

    t.hyper.batch_size = meta.at("batch_size").get<int>();
    t.hyper.epochs = meta.at("epochs").get<int>();
    t.hyper.weight_decay = meta.at("weight_decay").get<double>();
    t.hyper.seed = meta.at("seed").get<std::uint64_t>();
    t.eval_mse = meta.at("eval_mse").get<double>();
    t.best_epoch = meta.at("best_epoch").get<int>();
    for (const auto& e : meta.at("history")) {
      t.history.push_back(
          {e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("eval_mse").get<double>()});
    }
    t.preprocess = preprocess_from_json(meta.at("preprocess"));
    t.eval_predictions = predictions_from_json(preds);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + dir.string() + " has malformed metadata: " + e.what());
  } catch (const InvalidStageError& e) {
    throw FormatError("checkpoint " + dir.string() + ": " + e.what());
  } catch (const InvalidScoreError& e) {
    throw FormatError("checkpoint " + dir.string() + ": " + e.what());
  }

  load_state(*t.model.net, decode_weights(read_file(dir / "weights.bin")));
  t.model.net->eval();
  t.checkpoint_path = dir;
  return t;
}

bool has_valid_checkpoint(const fs::path& dir) noexcept {
  try {
    (void)load_checkpoint(dir);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace bcstage::models
