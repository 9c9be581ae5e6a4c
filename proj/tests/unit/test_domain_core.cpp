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
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "bcstage/core.hpp"
#include "support/oracles.hpp"

namespace bcstage {
namespace {

std::vector<Stage> to_stages(const std::vector<int>& values) {
  std::vector<Stage> out;
  for (const int v : values) out.emplace_back(v);
  return out;
}

// ---- Stage / BiopsyScore -------------------------------------------------

TEST(StageTest, AcceptsOnlyZeroToFour) {
  for (int v = 0; v <= 4; ++v) EXPECT_EQ(Stage(v).value(), v);
  EXPECT_THROW(Stage(-1), InvalidStageError);
  EXPECT_THROW(Stage(5), InvalidStageError);
}

TEST(BiopsyScoreTest, RejectsOutOfRangeAndNaN) {
  EXPECT_NO_THROW(BiopsyScore(0.0));
  EXPECT_NO_THROW(BiopsyScore(4.0));
  EXPECT_THROW(BiopsyScore(-1e-9), InvalidScoreError);
  EXPECT_THROW(BiopsyScore(4.0000001), InvalidScoreError);
  EXPECT_THROW(BiopsyScore(std::numeric_limits<double>::quiet_NaN()), InvalidScoreError);
}

// ---- stage_from_logits ---------------------------------------------------

TEST(StageFromLogitsTest, UniqueArgmax) {
  EXPECT_EQ(stage_from_logits(std::vector<double>{0.1, 0.9, 0.3, 0.2, 0.1}).value(), 1);
}

TEST(StageFromLogitsTest, AllTieResolvesToLowest) {
  EXPECT_EQ(stage_from_logits(std::vector<double>{2.0, 2.0, 2.0, 2.0, 2.0}).value(), 0);
}

TEST(StageFromLogitsTest, TwoWayTieResolvesToLowest) {
  EXPECT_EQ(stage_from_logits(std::vector<double>{-1.0, -0.5, 0.0, 3.2, 3.2}).value(), 3);
}

TEST(StageFromLogitsTest, FloatLogitsAreAccepted) {
  EXPECT_EQ(stage_from_logits(std::array<float, 5>{0.f, 0.f, 0.f, 0.f, 1.f}).value(), 4);
}

TEST(StageFromLogitsTest, WrongLengthOrNonFiniteThrows) {
  EXPECT_THROW((void)stage_from_logits(std::vector<double>{1.0, 2.0}), InvalidLogitsError);
  EXPECT_THROW((void)stage_from_logits(std::vector<double>(6, 0.0)), InvalidLogitsError);
  EXPECT_THROW((void)stage_from_logits(std::vector<double>{}), InvalidLogitsError);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)stage_from_logits(std::vector<double>{0, 0, inf, 0, 0}), InvalidLogitsError);
  EXPECT_THROW((void)stage_from_logits(std::vector<double>{0, 0, 0, 0, std::nan("")}), InvalidLogitsError);
}

TEST(StageFromLogitsTest, ShiftAndPositiveScaleEquivariant) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> logit(-5.0, 5.0);
  std::uniform_real_distribution<double> shift(-100.0, 100.0);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  std::uniform_int_distribution<int> small(-3, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    // Even trials: small integer logits (many ties) with exact integer
    // shifts and power-of-two scales. Odd trials: continuous logits.
    const bool ties = trial % 2 == 0;
    std::vector<double> x(5);
    for (auto& v : x) v = ties ? small(gen) : logit(gen);
    const double c = ties ? small(gen) : shift(gen);
    const double k = ties ? std::ldexp(1.0, small(gen)) : scale(gen);
    std::vector<double> shifted(x);
    std::vector<double> scaled(x);
    for (std::size_t i = 0; i < 5; ++i) {
      shifted[i] += c;
      scaled[i] *= k;
    }
    const int base = stage_from_logits(x).value();
    EXPECT_EQ(stage_from_logits(shifted).value(), base);
    EXPECT_EQ(stage_from_logits(scaled).value(), base);
  }
}

// ---- biopsy_pcs ----------------------------------------------------------

TEST(BiopsyPcsTest, Fixtures) {
  EXPECT_EQ(biopsy_pcs(to_stages({2})).value(), 2.0);
  EXPECT_EQ(biopsy_pcs(to_stages({1, 2, 3})).value(), 2.0);
  EXPECT_EQ(biopsy_pcs(to_stages({0, 0, 4, 4})).value(), testing::brute_force_mean({0, 0, 4, 4}));
  EXPECT_EQ(biopsy_pcs(to_stages({0, 0, 4, 4})).value(), 2.0);
}

TEST(BiopsyPcsTest, EmptyBiopsyThrows) {
  EXPECT_THROW((void)biopsy_pcs(std::vector<Stage>{}), EmptyBiopsyError);
}

TEST(BiopsyPcsTest, MatchesOracleRangeAndPermutation) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> count(1, 16);
  std::uniform_int_distribution<int> stage(0, 4);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> values(count(gen));
    for (auto& v : values) v = stage(gen);
    const double got = biopsy_pcs(to_stages(values)).value();
    EXPECT_NEAR(got, testing::brute_force_mean(values), 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 4.0);
    auto shuffled = values;
    std::ranges::shuffle(shuffled, gen);
    EXPECT_NEAR(biopsy_pcs(to_stages(shuffled)).value(), got, 1e-12);
  }
}

TEST(BiopsyPcsTest, SingleSlideIsIdentity) {
  for (int v = 0; v <= 4; ++v) EXPECT_EQ(biopsy_pcs(to_stages({v})).value(), static_cast<double>(v));
}

// ---- mse -----------------------------------------------------------------

TEST(MseTest, Fixtures) {
  const std::vector<EvaluationPair> exact{{BiopsyScore(2.0), Stage(2)}};
  EXPECT_EQ(mse(exact), 0.0);
  const std::vector<EvaluationPair> halves{{BiopsyScore(0.5), Stage(1)}, {BiopsyScore(3.5), Stage(3)}};
  EXPECT_EQ(mse(halves), 0.25);
}

TEST(MseTest, EmptyThrows) { EXPECT_THROW((void)mse(std::vector<EvaluationPair>{}), EmptyEvaluationError); }

TEST(MseTest, MatchesTwoPassOracle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pred(0.0, 4.0);
  std::uniform_int_distribution<int> label(0, 4);
  std::uniform_int_distribution<int> size(1, 200);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(gen);
    std::vector<double> p(n);
    std::vector<int> y(n);
    std::vector<EvaluationPair> pairs;
    for (int i = 0; i < n; ++i) {
      p[i] = pred(gen);
      y[i] = label(gen);
      pairs.push_back({BiopsyScore(p[i]), Stage(y[i])});
    }
    EXPECT_NEAR(mse(pairs), testing::two_pass_mse(p, y), 1e-12);
  }
}

TEST(MseTest, NonNegativeAndZeroIffExact) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> label(0, 4);
  std::uniform_real_distribution<double> noise(-0.4, 0.4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<EvaluationPair> pairs;
    const bool exact = trial % 2 == 0;
    for (int i = 0; i < 20; ++i) {
      const int y = label(gen);
      const double p = exact ? y : std::clamp(y + noise(gen), 0.0, 4.0);
      pairs.push_back({BiopsyScore(p), Stage(y)});
    }
    const double m = mse(pairs);
    EXPECT_GE(m, 0.0);
    const bool all_exact = std::ranges::all_of(
        pairs, [](const EvaluationPair& e) { return e.predicted.value() == e.actual.value(); });
    EXPECT_EQ(m == 0.0, all_exact);
  }
}

// ---- ensemble_pcs --------------------------------------------------------

TEST(EnsemblePcsTest, Fixtures) {
  EXPECT_EQ(ensemble_pcs(std::vector<BiopsyScore>{BiopsyScore(1.0), BiopsyScore(2.0), BiopsyScore(3.0)}).value(),
            2.0);
  EXPECT_EQ(ensemble_pcs(std::vector<BiopsyScore>{BiopsyScore(2.5)}).value(), 2.5);
}

TEST(EnsemblePcsTest, IdenticalScoresReproduceExactly) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> score(0.0, 4.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + trial % 16;
    const double s = trial == 0 ? 0.1 : score(gen);
    EXPECT_EQ(ensemble_pcs(std::vector<BiopsyScore>(k, BiopsyScore(s))).value(), s);
  }
}

TEST(EnsemblePcsTest, EmptyThrows) {
  EXPECT_THROW((void)ensemble_pcs(std::vector<BiopsyScore>{}), EmptyEnsembleError);
}

TEST(EnsemblePcsTest, PermutationsAreBitIdentical) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> score(0.0, 4.0);
  std::uniform_int_distribution<int> size(1, 11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<BiopsyScore> scores;
    for (int i = size(gen); i > 0; --i) scores.emplace_back(score(gen));
    const double base = ensemble_pcs(scores).value();
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 4.0);
    std::ranges::shuffle(scores, gen);
    EXPECT_EQ(ensemble_pcs(scores).value(), base);
  }
}

TEST(EnsemblePcsTest, MapOverloadAgreesWithList) {
  const std::map<std::string, BiopsyScore> by_id{
      {"b", BiopsyScore(0.5)}, {"a", BiopsyScore(3.0)}, {"c", BiopsyScore(1.25)}};
  EXPECT_EQ(ensemble_pcs(by_id).value(),
            ensemble_pcs(std::vector<BiopsyScore>{BiopsyScore(1.25), BiopsyScore(0.5), BiopsyScore(3.0)}).value());
}

// Deep-ensemble Jensen bound: averaging members never increases MSE, and the
// gap is exactly the mean across-member variance.
TEST(EnsemblePcsTest, JensenBound) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<int> label(0, 4);
  std::uniform_int_distribution<int> members(1, 6);
  std::uniform_int_distribution<int> biopsies(1, 30);
  std::uniform_real_distribution<double> pred(0.0, 4.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = members(gen);
    const int n = biopsies(gen);
    const bool agree = trial % 4 == 0;
    std::vector<int> y(n);
    for (auto& v : y) v = label(gen);
    std::vector<std::vector<double>> p(k, std::vector<double>(n));
    for (int j = 0; j < n; ++j) {
      const double shared = pred(gen);
      for (int m = 0; m < k; ++m) p[m][j] = agree ? shared : pred(gen);
    }
    double mean_member = 0.0;
    for (int m = 0; m < k; ++m) {
      std::vector<EvaluationPair> pairs;
      for (int j = 0; j < n; ++j) pairs.push_back({BiopsyScore(p[m][j]), Stage(y[j])});
      mean_member += mse(pairs) / k;
    }
    std::vector<EvaluationPair> ens;
    double variance = 0.0;
    for (int j = 0; j < n; ++j) {
      std::vector<BiopsyScore> scores;
      double mu = 0.0;
      for (int m = 0; m < k; ++m) {
        scores.emplace_back(p[m][j]);
        mu += p[m][j] / k;
      }
      for (int m = 0; m < k; ++m) variance += (p[m][j] - mu) * (p[m][j] - mu) / k / n;
      ens.push_back({ensemble_pcs(scores), Stage(y[j])});
    }
    const double ensemble_mse = mse(ens);
    EXPECT_LE(ensemble_mse, mean_member + 1e-12);
    EXPECT_NEAR(mean_member - ensemble_mse, variance, 1e-9);
    const bool all_agree = agree || k == 1;
    EXPECT_EQ(std::abs(mean_member - ensemble_mse) <= 1e-12, all_agree) << "trial " << trial;
  }
}

// ---- select_members ------------------------------------------------------

const std::map<std::string, double>& reference_best_mses() {
  static const std::map<std::string, double> table{
      {"resnet18", 1.001620},     {"resnet50", 0.970504},       {"resnet152", 1.001902}, {"efficientnet_m", 0.829745},
      {"convnext_base", 0.957443}, {"wide_resnet101", 0.931212}, {"vgg", 0.939045},       {"regnet", 0.988756},
      {"swin_b", 0.897878},       {"maxvit", 0.855656}};
  return table;
}

TEST(SelectMembersTest, ReferenceTableBelowOne) {
  const EnsembleSpec spec{{}, EnsembleStrategy::kBelowThreshold, 1.0};
  const auto selected = select_members(reference_best_mses(), spec);
  const std::vector<std::string> expected{"convnext_base", "efficientnet_m", "maxvit",        "regnet",
                                          "resnet50",      "swin_b",         "vgg",           "wide_resnet101"};
  EXPECT_EQ(selected, expected);
}

TEST(SelectMembersTest, AllStrategyIsIdentity) {
  const EnsembleSpec spec{{}, EnsembleStrategy::kAll, 1.0};
  EXPECT_EQ(select_members(reference_best_mses(), spec).size(), 10u);
}

TEST(SelectMembersTest, ZeroThresholdSelectsNothing) {
  const EnsembleSpec spec{{}, EnsembleStrategy::kBelowThreshold, 0.0};
  EXPECT_TRUE(select_members(reference_best_mses(), spec).empty());
}

TEST(SelectMembersTest, ThresholdIsStrict) {
  const std::map<std::string, double> mses{{"a", 1.0}, {"b", 0.999999}};
  EXPECT_EQ(select_members(mses, {{}, EnsembleStrategy::kBelowThreshold, 1.0}), std::vector<std::string>{"b"});
}

TEST(SelectMembersTest, RejectsInvalidMse) {
  const std::map<std::string, double> bad{{"a", -0.1}};
  EXPECT_THROW((void)select_members(bad, {}), InvalidArgumentError);
  const std::map<std::string, double> nan{{"a", std::nan("")}};
  EXPECT_THROW((void)select_members(nan, {}), InvalidArgumentError);
}

TEST(SelectMembersTest, MonotoneInThresholdAndSubsetOfAll) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> value(0.0, 2.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, double> mses;
    for (int i = 0; i < 8; ++i) mses["m" + std::to_string(i)] = value(gen);
    const auto all = select_members(mses, {{}, EnsembleStrategy::kAll, 1.0});
    double t1 = value(gen);
    double t2 = value(gen);
    if (t1 > t2) std::swap(t1, t2);
    const auto low = select_members(mses, {{}, EnsembleStrategy::kBelowThreshold, t1});
    const auto high = select_members(mses, {{}, EnsembleStrategy::kBelowThreshold, t2});
    EXPECT_TRUE(std::ranges::includes(high, low));
    EXPECT_TRUE(std::ranges::includes(all, high));
    EXPECT_TRUE(std::ranges::is_sorted(high));
  }
}

TEST(EnsembleSpecTest, ValidateForPrediction) {
  EXPECT_THROW(EnsembleSpec{}.validate_for_prediction(), EmptyEnsembleError);
  EnsembleSpec zero{{"a"}, EnsembleStrategy::kBelowThreshold, 0.0};
  EXPECT_THROW(zero.validate_for_prediction(), InvalidArgumentError);
  EnsembleSpec ok{{"a"}, EnsembleStrategy::kBelowThreshold, 1.0};
  EXPECT_NO_THROW(ok.validate_for_prediction());
}

}  // namespace
}  // namespace bcstage
