/*
 * Copyright 2026 The FairAttack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairattack/fairness.h"

#include <cmath>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "fairattack/errors.h"
#include "oracles.h"

namespace fairattack {
namespace {

// `n` samples of group `g` with the first `positives` predicted positive.
void Append(std::vector<int>& preds, std::vector<int>& groups, int g, int n, int positives) {
  for (int i = 0; i < n; ++i) {
    preds.push_back(i < positives ? 1 : 0);
    groups.push_back(g);
  }
}

TEST(DemographicParityTest, AllPositiveIsZero) {
  EXPECT_EQ(DemographicParity(std::vector<int>{1, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}, 2),
            0.0);
}

TEST(DemographicParityTest, TwoGroupExample) {
  // group 0 rate 0.5, group 1 rate 1.0.
  EXPECT_DOUBLE_EQ(
      DemographicParity(std::vector<int>{1, 0, 1, 1}, std::vector<int>{0, 0, 1, 1}, 2), 0.5);
}

TEST(DemographicParityTest, ThreeGroupsUseLargestGap) {
  std::vector<int> preds, groups;
  Append(preds, groups, 0, 10, 2);
  Append(preds, groups, 1, 10, 5);
  Append(preds, groups, 2, 10, 9);
  EXPECT_NEAR(DemographicParity(preds, groups, 3), 0.7, 1e-15);
}

TEST(DemographicParityTest, MissingGroupIsAnError) {
  EXPECT_THROW(DemographicParity(std::vector<int>{1, 0}, std::vector<int>{0, 0}, 2), DataError);
}

TEST(EqualizedOddsTest, PerfectPredictionsAreFair) {
  const std::vector<int> y = {1, 0, 1, 0, 1, 0};
  const std::vector<int> a = {0, 0, 1, 1, 1, 0};
  EXPECT_EQ(EqualizedOdds(y, y, a, 2), 0.0);
}

TEST(EqualizedOddsTest, HandBuiltTprAndFprGaps) {
  // Per group: 10 positives and 10 negatives.
  // TPR: group 0 = 8/10, group 1 = 5/10  -> gap 0.3
  // FPR: group 0 = 2/10, group 1 = 1/10  -> gap 0.1
  std::vector<int> preds, labels, groups;
  auto add = [&](int g, int y, int n, int positives) {
    for (int i = 0; i < n; ++i) {
      preds.push_back(i < positives ? 1 : 0);
      labels.push_back(y);
      groups.push_back(g);
    }
  };
  add(0, 1, 10, 8);
  add(0, 0, 10, 2);
  add(1, 1, 10, 5);
  add(1, 0, 10, 1);
  EXPECT_NEAR(EqualizedOdds(preds, labels, groups, 2), 0.3, 1e-15);
}

TEST(EqualizedOddsTest, MirroredGroupsAreFair) {
  const std::vector<int> preds = {1, 0, 1, 1, 1, 0, 1, 1};
  const std::vector<int> labels = {1, 1, 0, 0, 1, 1, 0, 0};
  const std::vector<int> groups = {0, 0, 0, 0, 1, 1, 1, 1};
  EXPECT_EQ(EqualizedOdds(preds, labels, groups, 2), 0.0);
}

TEST(EqualizedOddsTest, EmptyCellIsAnError) {
  EXPECT_THROW(EqualizedOdds(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1},
                             std::vector<int>{0, 0, 1}, 2),
               DataError);
}

TEST(FairnessMetricsTest, MatchOracleBoundedAndSwapInvariant) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + static_cast<int>(rng() % 2);
    std::vector<int> preds, labels, groups;
    for (int g = 0; g < k; ++g) {
      for (int y = 0; y < 2; ++y) {
        preds.push_back(static_cast<int>(rng() % 2));
        labels.push_back(y);
        groups.push_back(g);
      }
    }
    for (int i = 0; i < 20; ++i) {
      preds.push_back(static_cast<int>(rng() % 2));
      labels.push_back(static_cast<int>(rng() % 2));
      groups.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k)));
    }
    const double dp = DemographicParity(preds, groups, k);
    const double eod = EqualizedOdds(preds, labels, groups, k);
    EXPECT_NEAR(dp, oracle::DemographicParity(preds, groups, k), 1e-15);
    EXPECT_NEAR(eod, oracle::EqualizedOdds(preds, labels, groups, k), 1e-15);
    EXPECT_GE(dp, 0.0);
    EXPECT_LE(dp, 1.0);
    EXPECT_GE(eod, 0.0);
    EXPECT_LE(eod, 1.0);
    std::vector<int> swapped = groups;
    for (int& g : swapped) g = k - 1 - g;
    EXPECT_EQ(DemographicParity(preds, swapped, k), dp);
    EXPECT_EQ(EqualizedOdds(preds, labels, swapped, k), eod);
  }
}

TEST(EvaluateTest, ThresholdsAtOneHalf) {
  const std::vector<double> probs = {0.5, 0.49, 0.9, 0.1};
  EXPECT_EQ(Threshold(probs), (std::vector<int>{1, 0, 1, 0}));
  const FairnessReport r =
      Evaluate(probs, std::vector<int>{1, 1, 0, 0}, std::vector<int>{0, 1, 0, 1}, 2);
  // Predictions 1, 0, 1, 0: rows 1 and 2 are wrong.
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  // Group 0 (rows 0, 2) predicts 1, 1; group 1 (rows 1, 3) predicts 0, 0.
  EXPECT_DOUBLE_EQ(r.dp, 1.0);
  EXPECT_DOUBLE_EQ(r.eod, 1.0);
}

TEST(ConstraintMatrixTest, TwoGroups) {
  const ConstraintMatrix q = BuildConstraintMatrix(2);
  ASSERT_EQ(q.q.rows(), 2);
  ASSERT_EQ(q.q.cols(), 2);
  EXPECT_EQ(q.q(0, 0), 1.0);
  EXPECT_EQ(q.q(0, 1), -1.0);
  EXPECT_EQ(q.q(1, 0), -1.0);
  EXPECT_EQ(q.q(1, 1), 1.0);
  EXPECT_EQ(q.row_labels.size(), 2u);
}

TEST(ConstraintMatrixTest, ThreeGroupsPairsAndAnnihilation) {
  const ConstraintMatrix q = BuildConstraintMatrix(3);
  ASSERT_EQ(q.q.rows(), 6);
  EXPECT_EQ((q.q * Eigen::Vector3d::Constant(0.42)).cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index r = 0; r < q.q.rows(); ++r) {
    EXPECT_EQ(q.q.row(r).sum(), 0.0);
    bool negation_found = false;
    for (Eigen::Index s = 0; s < q.q.rows(); ++s) {
      negation_found = negation_found || (q.q.row(s) == -q.q.row(r));
    }
    EXPECT_TRUE(negation_found) << "row " << r;
  }
  EXPECT_THROW(BuildConstraintMatrix(1), InvalidArgument);
}

TEST(ConditionalMomentsTest, Examples) {
  const std::vector<double> constant(6, 0.7);
  const MomentVector c =
      ConditionalMoments(constant, std::vector<int>{0, 1, 0, 1, 1, 0}, 2,
                         MomentMode::kDemographicParity);
  EXPECT_DOUBLE_EQ(c.values[0], 0.7);
  EXPECT_DOUBLE_EQ(c.values[1], 0.7);

  const MomentVector m = ConditionalMoments(std::vector<double>{1, 0, 1, 1},
                                            std::vector<int>{0, 0, 1, 1}, 2,
                                            MomentMode::kDemographicParity);
  EXPECT_DOUBLE_EQ(m.values[0], 0.5);
  EXPECT_DOUBLE_EQ(m.values[1], 1.0);
  EXPECT_EQ(m.counts, (std::vector<int>{2, 2}));

  // One positive per group: the TPR moments are those samples' probabilities.
  const MomentVector tpr = ConditionalMoments(
      std::vector<double>{0.3, 0.8, 0.6, 0.1}, std::vector<int>{0, 0, 1, 1}, 2,
      MomentMode::kTruePositiveRate, std::vector<int>{1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(tpr.values[0], 0.3);
  EXPECT_DOUBLE_EQ(tpr.values[1], 0.1);

  EXPECT_THROW(ConditionalMoments(std::vector<double>{0.3, 0.8}, std::vector<int>{0, 1}, 2,
                                  MomentMode::kTruePositiveRate, std::vector<int>{1, 0}),
               DataError);
  EXPECT_THROW(ConditionalMoments(std::vector<double>{0.3, 0.8}, std::vector<int>{0, 1}, 2,
                                  MomentMode::kFalsePositiveRate),
               InvalidArgument);
}

TEST(FairnessLossTest, EqualMomentsGiveZero) {
  const std::vector<double> probs = {0.2, 0.6, 0.6, 0.2};
  const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.0, MomentKind::kSoft};
  EXPECT_EQ(FairnessLoss(probs, std::vector<int>{0, 0, 1, 1}, 2, spec), 0.0);
}

TEST(FairnessLossTest, HandEvaluatedViolation) {
  // eta = [0.65, 0.35] so Q eta = [0.3, -0.3]; ReLU(. - 0.1) = [0.2, 0].
  const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.1, MomentKind::kSoft};
  EXPECT_NEAR(FairnessLoss(std::vector<double>{0.65, 0.35}, std::vector<int>{0, 1}, 2, spec),
              0.2, 1e-15);
}

TEST(FairnessLossTest, HardMomentsEqualDemographicParity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> probs;
    std::vector<int> groups = {0, 1};
    for (int i = 0; i < 2; ++i) probs.push_back(u(rng));
    for (int i = 0; i < 10; ++i) {
      probs.push_back(u(rng));
      groups.push_back(static_cast<int>(rng() % 2));
    }
    const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.0, MomentKind::kHard};
    const double dp = DemographicParity(Threshold(probs), groups, 2);
    // With the deduplicated +/- pair only one row is active, so no sqrt(2).
    EXPECT_NEAR(FairnessLoss(probs, groups, 2, spec), dp, 1e-15);
  }
}

struct RandomInstance {
  std::vector<double> probs;
  std::vector<int> groups;
  std::vector<int> labels;
  int k = 2;
  MomentMode mode = MomentMode::kDemographicParity;
  double eps = 0.0;
};

// k <= 3 groups, <= 12 samples, every (group, label) cell non-empty.
RandomInstance MakeInstance(std::mt19937_64& rng) {
  RandomInstance in;
  in.k = 2 + static_cast<int>(rng() % 2);
  const MomentMode modes[] = {MomentMode::kDemographicParity, MomentMode::kTruePositiveRate,
                              MomentMode::kFalsePositiveRate};
  in.mode = modes[rng() % 3];
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int g = 0; g < in.k; ++g) {
    for (int y = 0; y < 2; ++y) {
      in.groups.push_back(g);
      in.labels.push_back(y);
    }
  }
  const int extra = static_cast<int>(rng() % static_cast<std::uint64_t>(12 - 2 * in.k + 1));
  for (int i = 0; i < extra; ++i) {
    in.groups.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(in.k)));
    in.labels.push_back(static_cast<int>(rng() % 2));
  }
  for (std::size_t i = 0; i < in.groups.size(); ++i) in.probs.push_back(u(rng));
  in.eps = rng() % 2 == 0 ? 0.0 : 0.2 * u(rng);
  return in;
}

TEST(FairnessLossTest, MatchesPairwiseOracle) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    const RandomInstance in = MakeInstance(rng);
    const FairnessLossSpec spec{in.mode, in.eps, MomentKind::kSoft};
    EXPECT_NEAR(FairnessLoss(in.probs, in.groups, in.k, spec, in.labels),
                oracle::PairwiseViolationLoss(in.probs, in.groups, in.labels, in.k, in.mode,
                                              in.eps),
                1e-12);
  }
}

TEST(FairnessLossTest, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const RandomInstance in = MakeInstance(rng);
    double margin = 0.0;
    oracle::PairwiseViolationLoss(in.probs, in.groups, in.labels, in.k, in.mode, in.eps,
                                  &margin);
    if (margin < 1e-3) continue;  // too close to a ReLU kink
    const FairnessLossSpec spec{in.mode, in.eps, MomentKind::kSoft};
    if (FairnessLoss(in.probs, in.groups, in.k, spec, in.labels) == 0.0) continue;
    const Eigen::VectorXd a = FairnessLossGradProbs(in.probs, in.groups, in.k, spec, in.labels);
    const Eigen::VectorXd f =
        FairnessLossGradProbsFiniteDiff(in.probs, in.groups, in.k, spec, in.labels);
    EXPECT_LE(oracle::RelativeError(a, f), 1e-3);
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(FairnessLossTest, ZeroViolationGivesZeroGradient) {
  const std::vector<double> probs = {0.4, 0.5, 0.45, 0.45};
  const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.05, MomentKind::kSoft};
  const Eigen::VectorXd g = FairnessLossGradProbs(probs, std::vector<int>{0, 0, 1, 1}, 2, spec);
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FairnessLossTest, UniformShiftLeavesDpGradientUnchanged) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.2, 0.7);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> probs;
    std::vector<int> groups;
    for (int i = 0; i < 12; ++i) {
      probs.push_back(u(rng));
      groups.push_back(i % 3 == 0 ? 0 : 1);
    }
    std::vector<double> shifted = probs;
    for (double& p : shifted) p += 0.1;
    const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.0, MomentKind::kSoft};
    const Eigen::VectorXd a = FairnessLossGradProbs(probs, groups, 2, spec);
    const Eigen::VectorXd b = FairnessLossGradProbs(shifted, groups, 2, spec);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FairnessLossTest, NonIncreasingInBudgetAndZeroExactlyWhenSatisfied) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 50; ++t) {
    const RandomInstance in = MakeInstance(rng);
    double previous = std::numeric_limits<double>::infinity();
    const ConstraintMatrix q = BuildConstraintMatrix(in.k);
    const MomentVector m = ConditionalMoments(in.probs, in.groups, in.k, in.mode, in.labels);
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
      const FairnessLossSpec spec{in.mode, eps, MomentKind::kSoft};
      const double loss = FairnessLoss(in.probs, in.groups, in.k, spec, in.labels);
      EXPECT_LE(loss, previous);
      previous = loss;
      const bool satisfied = ((q.q * m.values).array() <= eps).all();
      EXPECT_EQ(loss == 0.0, satisfied);
    }
  }
}

}  // namespace
}  // namespace fairattack
