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

#include "bcstage/models/predict.hpp"

#include "bcstage/core/error.hpp"
#include "bcstage/core/metrics.hpp"
#include "tensor_batch.hpp"

namespace bcstage::models {

const data::RgbImage& SlideSource::image(const data::SlideRecord& slide) {
  const auto path = slide.image_path.is_absolute() ? slide.image_path : base_dir_ / slide.image_path;
  reads_.insert(path);
  if (const auto it = cache_.find(path); it != cache_.end()) return it->second;
  try {
    return cache_.emplace(path, data::load_rgb(path)).first->second;
  } catch (const IoError& e) {
    throw IoError("slide " + slide.slide_id + " of biopsy " + slide.biopsy_id + ": " + e.what());
  } catch (const ImageFormatError& e) {
    throw ImageFormatError("slide " + slide.slide_id + " of biopsy " + slide.biopsy_id + ": " + e.what());
  }
}

std::vector<Stage> predict_slides(const StageModel& model, std::span<const data::Sample> samples) {
  if (samples.empty()) return {};
  auto batch = stack_samples(samples, model.input_size);
  const auto params = model.net->parameters();
  if (!params.empty()) batch = batch.to(params.front().scalar_type());

  const bool was_training = model.net->is_training();
  if (was_training) model.net->eval();
  torch::Tensor logits;
  {
    torch::NoGradGuard no_grad;
    logits = model.net->forward(batch).to(torch::kFloat64).contiguous();
  }
  if (was_training) model.net->train();

  if (logits.dim() != 2 || logits.size(0) != batch.size(0) || logits.size(1) != kNumStages) {
    throw InputError("model produced logits of unexpected shape");
  }
  std::vector<Stage> out;
  out.reserve(samples.size());
  const auto* p = logits.data_ptr<double>();
  for (int64_t i = 0; i < logits.size(0); ++i) {
    out.push_back(stage_from_logits(std::span<const double>(p + i * kNumStages, kNumStages)));
  }
  return out;
}

PredictionRecord predict_biopsy(const StageModel& model, const data::BiopsyRecord& biopsy, SlideSource& source,
                                const data::PreprocessConfig& preprocess) {
  if (biopsy.slides.empty()) throw InputError("biopsy " + biopsy.biopsy_id + " has no slides");
  std::vector<data::Sample> samples;
  samples.reserve(biopsy.slides.size());
  for (const auto& slide : biopsy.slides) samples.push_back(data::preprocess_eval(source.image(slide), preprocess));
  PredictionRecord record;
  record.biopsy_id = biopsy.biopsy_id;
  record.slide_stages = predict_slides(model, samples);
  record.pcs = biopsy_pcs(record.slide_stages);
  record.actual = biopsy.stage;
  return record;
}

std::vector<PredictionRecord> predict_manifest(const StageModel& model, const data::DatasetManifest& manifest,
                                               SlideSource& source, const data::PreprocessConfig& preprocess) {
  std::vector<PredictionRecord> out;
  out.reserve(manifest.biopsies.size());
  for (const auto& b : manifest.biopsies) out.push_back(predict_biopsy(model, b, source, preprocess));
  return out;
}

double prediction_mse(std::span<const PredictionRecord> records) {
  std::vector<EvaluationPair> pairs;
  for (const auto& r : records) {
    if (r.actual) pairs.push_back({r.pcs, *r.actual});
  }
  return mse(pairs);
}

}  // namespace bcstage::models
