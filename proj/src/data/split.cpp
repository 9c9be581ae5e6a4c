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

#include "bcstage/data/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "bcstage/core/error.hpp"
#include "bcstage/util/rng.hpp"

namespace bcstage::data {
namespace {

// A unit is the indivisible thing that lands on one side of the split: a
// single biopsy, or every biopsy of one patient.
struct Unit {
  std::vector<std::size_t> biopsies;
  int stratum = 0;
};

int modal_stage(const DatasetManifest& manifest, const std::vector<std::size_t>& members) {
  std::array<int, Stage::kCount> counts{};
  for (const auto i : members) ++counts[manifest.biopsies[i].stage->value()];
  return static_cast<int>(std::ranges::max_element(counts) - counts.begin());
}

std::vector<Unit> make_units(const DatasetManifest& manifest, bool group_by_patient) {
  std::vector<Unit> units;
  if (!group_by_patient) {
    units.reserve(manifest.biopsies.size());
    for (std::size_t i = 0; i < manifest.biopsies.size(); ++i) {
      units.push_back(Unit{{i}, manifest.biopsies[i].stage->value()});
    }
    return units;
  }
  std::unordered_map<std::string, std::size_t> by_patient;
  for (std::size_t i = 0; i < manifest.biopsies.size(); ++i) {
    const auto [it, inserted] = by_patient.try_emplace(manifest.biopsies[i].patient_id, units.size());
    if (inserted) units.emplace_back();
    units[it->second].biopsies.push_back(i);
  }
  for (auto& u : units) u.stratum = modal_stage(manifest, u.biopsies);
  return units;
}

}  // namespace

SplitResult split_train_eval(const DatasetManifest& manifest, const SplitOptions& options) {
  if (!(options.ratio > 0.0 && options.ratio < 1.0)) {
    throw InvalidArgumentError("split ratio must lie in (0, 1), got " + std::to_string(options.ratio));
  }
  for (const auto& b : manifest.biopsies) {
    if (!b.stage) {
      throw InvalidArgumentError("biopsy '" + b.biopsy_id + "' has no stage; impute before splitting");
    }
  }

  SplitResult result;
  const auto units = make_units(manifest, options.group_by_patient);

  std::array<std::vector<std::size_t>, Stage::kCount> strata;
  for (std::size_t u = 0; u < units.size(); ++u) strata[units[u].stratum].push_back(u);

  const auto target = static_cast<std::size_t>(std::llround(options.ratio * static_cast<double>(units.size())));

  // Undersized strata go wholly to train.
  std::size_t forced = 0;
  std::size_t large_total = 0;
  std::array<bool, Stage::kCount> small{};
  for (int s = 0; s < Stage::kCount; ++s) {
    const auto n = strata[s].size();
    if (n == 1) {
      small[s] = true;
      forced += n;
      result.warnings.push_back("stage " + std::to_string(s) +
                                " has fewer than 2 units; placed wholly in train");
    } else {
      large_total += n;
    }
  }

  const std::size_t remaining = std::min(target > forced ? target - forced : 0, large_total);
  std::array<std::size_t, Stage::kCount> quota{};
  std::array<double, Stage::kCount> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < Stage::kCount; ++s) {
    if (small[s]) {
      quota[s] = strata[s].size();
      continue;
    }
    if (large_total == 0) continue;
    const double exact = static_cast<double>(remaining) * static_cast<double>(strata[s].size()) /
                         static_cast<double>(large_total);
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    remainder[s] = exact - std::floor(exact);
    assigned += quota[s];
  }
  // Largest remainder; ties go to the lower stage.
  std::array<int, Stage::kCount> order{0, 1, 2, 3, 4};
  std::ranges::stable_sort(order, [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < remaining && k < order.size(); ++k) {
    const int s = order[k];
    if (small[s] || quota[s] >= strata[s].size()) continue;
    ++quota[s];
    ++assigned;
  }

  std::vector<bool> in_train(manifest.biopsies.size(), false);
  for (int s = 0; s < Stage::kCount; ++s) {
    auto members = strata[s];
    Rng rng(Rng::derive(options.seed, {static_cast<std::uint64_t>(s)}));
    rng.shuffle(members);
    for (std::size_t k = 0; k < quota[s] && k < members.size(); ++k) {
      for (const auto b : units[members[k]].biopsies) in_train[b] = true;
    }
  }

  result.train.source = result.eval.source = manifest.source;
  result.train.base_dir = result.eval.base_dir = manifest.base_dir;
  for (std::size_t i = 0; i < manifest.biopsies.size(); ++i) {
    BiopsyRecord record = manifest.biopsies[i];
    record.split = in_train[i] ? Split::kTrain : Split::kEval;
    (in_train[i] ? result.train : result.eval).biopsies.push_back(std::move(record));
  }
  return result;
}

}  // namespace bcstage::data
