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

#include "bcstage/experiment/stats.hpp"

#include <set>
#include <unordered_map>

namespace bcstage::experiment {
namespace {

std::string split_name(data::Split s) {
  return s == data::Split::kUnassigned ? "unassigned" : std::string(data::to_string(s));
}

}  // namespace

DatasetStats dataset_stats(const data::DatasetManifest& manifest) {
  DatasetStats s;
  for (const auto split : {data::Split::kTrain, data::Split::kEval, data::Split::kTest, data::Split::kUnassigned}) {
    s.per_split[split_name(split)];
  }
  std::map<std::string, std::set<std::string>> patients_by_split;
  std::unordered_map<std::string, std::set<data::Split>> splits_by_patient;
  for (const auto& b : manifest.biopsies) {
    auto& c = s.per_split[split_name(b.split)];
    ++s.biopsies;
    ++c.biopsies;
    s.slides += b.slides.size();
    c.slides += b.slides.size();
    if (b.stage) {
      ++s.biopsies_per_stage[static_cast<std::size_t>(b.stage->value())];
      ++c.labeled;
    } else {
      ++s.unlabeled;
      ++c.unlabeled;
    }
    patients_by_split[split_name(b.split)].insert(b.patient_id);
    splits_by_patient[b.patient_id].insert(b.split);
  }
  for (auto& [name, c] : s.per_split) c.patients = patients_by_split[name].size();
  s.patients = splits_by_patient.size();
  for (const auto& [patient, splits] : splits_by_patient) {
    if (splits.size() > 1) ++s.patients_in_several_splits;
  }
  return s;
}

data::DatasetManifest assign_splits(const data::DatasetManifest& manifest, const data::SplitOptions& options) {
  const auto split = data::split_train_eval(data::impute_unlabeled(manifest).manifest, options);
  std::set<std::string> train_ids;
  for (const auto& b : split.train.biopsies) train_ids.insert(b.biopsy_id);
  auto out = manifest;
  for (auto& b : out.biopsies) b.split = train_ids.contains(b.biopsy_id) ? data::Split::kTrain : data::Split::kEval;
  return out;
}

}  // namespace bcstage::experiment
