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

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

#include "bcstage/core/error.hpp"
#include "bcstage/data/split.hpp"

namespace bcstage::data {
namespace {

DatasetManifest make_manifest(const std::array<int, 5>& per_stage, int biopsies_per_patient = 1) {
  DatasetManifest m;
  int id = 0;
  for (int s = 0; s < 5; ++s) {
    for (int k = 0; k < per_stage[s]; ++k, ++id) {
      BiopsyRecord b;
      b.biopsy_id = "b" + std::to_string(id);
      b.patient_id = "p" + std::to_string(id / biopsies_per_patient);
      b.stage = Stage(s);
      b.slides.push_back({b.biopsy_id + ".png", b.biopsy_id, b.biopsy_id + ".png"});
      m.biopsies.push_back(b);
    }
  }
  return m;
}

std::set<std::string> ids(const DatasetManifest& m) {
  std::set<std::string> out;
  for (const auto& b : m.biopsies) out.insert(b.biopsy_id);
  return out;
}

TEST(SplitTest, EightyTwentyOnHundred) {
  const auto m = make_manifest({20, 20, 20, 20, 20});
  const auto r = split_train_eval(m, {0.8, 7, false});
  EXPECT_EQ(r.train.biopsies.size(), 80u);
  EXPECT_EQ(r.eval.biopsies.size(), 20u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(SplitTest, UnevenStrataStillHitTheTotal) {
  const auto m = make_manifest({33, 7, 21, 3, 36});
  const auto r = split_train_eval(m, {0.8, 1, false});
  EXPECT_EQ(r.train.biopsies.size(), 80u);  // round(0.8 * 100)
  EXPECT_EQ(r.eval.biopsies.size(), 20u);
}

// Oracle: with 10 per stage each stratum's exact quota 0.8 * 10 = 8 is integral.
TEST(SplitTest, StratifiedPerStageCounts) {
  const auto m = make_manifest({10, 10, 10, 10, 10});
  const auto r = split_train_eval(m, {0.8, 99, false});
  std::array<int, 5> train{};
  std::array<int, 5> eval{};
  for (const auto& b : r.train.biopsies) ++train[b.stage->value()];
  for (const auto& b : r.eval.biopsies) ++eval[b.stage->value()];
  for (int s = 0; s < 5; ++s) {
    EXPECT_EQ(train[s], 8) << "stage " << s;
    EXPECT_EQ(eval[s], 2) << "stage " << s;
  }
}

TEST(SplitTest, DeterministicForFixedSeedAndSeedSensitive) {
  const auto m = make_manifest({10, 10, 10, 10, 10});
  const auto a = split_train_eval(m, {0.8, 42, false});
  const auto b = split_train_eval(m, {0.8, 42, false});
  EXPECT_EQ(ids(a.train), ids(b.train));
  EXPECT_EQ(ids(a.eval), ids(b.eval));
  const auto c = split_train_eval(m, {0.8, 43, false});
  EXPECT_NE(ids(a.eval), ids(c.eval));
}

TEST(SplitTest, PartitionIsDisjointExhaustiveAndLabelled) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = make_manifest({9, 4, 13, 2, 6});
    const auto r = split_train_eval(m, {0.7, seed, false});
    const auto t = ids(r.train);
    const auto e = ids(r.eval);
    std::set<std::string> both;
    std::ranges::set_intersection(t, e, std::inserter(both, both.begin()));
    EXPECT_TRUE(both.empty());
    std::set<std::string> all = t;
    all.insert(e.begin(), e.end());
    EXPECT_EQ(all, ids(m));
    for (const auto& b : r.train.biopsies) EXPECT_EQ(b.split, Split::kTrain);
    for (const auto& b : r.eval.biopsies) EXPECT_EQ(b.split, Split::kEval);
  }
}

TEST(SplitTest, SingletonStratumGoesToTrainWithWarning) {
  const auto m = make_manifest({10, 10, 10, 1, 10});
  const auto r = split_train_eval(m, {0.8, 3, false});
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("stage 3"), std::string::npos);
  const bool stage3_in_train = std::ranges::any_of(r.train.biopsies, [](const auto& b) { return b.stage->value() == 3; });
  EXPECT_TRUE(stage3_in_train);
  EXPECT_EQ(r.train.biopsies.size() + r.eval.biopsies.size(), 41u);
  EXPECT_EQ(r.train.biopsies.size(), 33u);  // round(0.8 * 41)
}

TEST(SplitTest, PatientGroupingKeepsPatientsTogether) {
  const auto m = make_manifest({12, 12, 12, 12, 12}, 3);
  const auto r = split_train_eval(m, {0.8, 5, true});
  std::set<std::string> train_patients;
  for (const auto& b : r.train.biopsies) train_patients.insert(b.patient_id);
  for (const auto& b : r.eval.biopsies) EXPECT_FALSE(train_patients.contains(b.patient_id)) << b.patient_id;
  EXPECT_EQ(r.train.biopsies.size() + r.eval.biopsies.size(), 60u);
}

TEST(SplitTest, RejectsBadRatioAndUnlabeledInput) {
  const auto m = make_manifest({2, 2, 2, 2, 2});
  EXPECT_THROW((void)split_train_eval(m, {0.0, 1, false}), InvalidArgumentError);
  EXPECT_THROW((void)split_train_eval(m, {1.0, 1, false}), InvalidArgumentError);
  auto unlabeled = m;
  unlabeled.biopsies[0].stage.reset();
  EXPECT_THROW((void)split_train_eval(unlabeled, {0.8, 1, false}), InvalidArgumentError);
}

}  // namespace
}  // namespace bcstage::data
