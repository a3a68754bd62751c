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

#include "fairattack/attack.h"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "fairattack/errors.h"
#include "oracles.h"

namespace fairattack {
namespace {

using ::testing::HasSubstr;
using ::testing::IsEmpty;
using ::testing::SizeIs;

// Two groups; column 0 is the group indicator, the label depends on
// column 1 and, more weakly, on the group.
TabularDataset Shard(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TabularDataset ds;
  ds.features = RowMatrix::Zero(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const int g = static_cast<int>(i % 2);
    ds.features(r, 0) = g;
    for (Eigen::Index c = 1; c < 4; ++c) ds.features(r, c) = u(rng);
    const double score = ds.features(r, 1) + 0.2 * g + 0.2 * (u(rng) - 0.5);
    ds.labels.push_back(score > 0.6 ? 1 : 0);
    ds.sensitive.push_back(g);
  }
  ds.feature_names = {"g", "a", "b", "c"};
  ds.group_names = {"g0", "g1"};
  ds.group_count = 2;
  return ds;
}

ModelParams Init(std::uint64_t seed) { return ModelParams::Init({4, 16, 8}, seed); }

TrainOptions Options(int epochs = 1, double lr = 0.05) {
  TrainOptions o;
  o.epochs = epochs;
  o.lr = lr;
  o.batch_size = 7;
  o.class_balanced = true;
  return o;
}

TEST(LocalTrainTest, NoOpTrainingGivesZeroDelta) {
  const TabularDataset shard = Shard(50, 1);
  AttackConfig cfg;
  for (const TrainOptions& o : {Options(0), Options(3, 0.0)}) {
    EXPECT_TRUE(HonestLocalTrain(Init(1), shard, o, 7).update.delta.isZero(0.0));
    EXPECT_TRUE(MaliciousLocalTrain(Init(1), shard, cfg, o, 7).update.delta.isZero(0.0));
  }
}

TEST(LocalTrainTest, ReportsSampleCountAndLeavesShardAlone) {
  const TabularDataset shard = Shard(50, 2);
  const TabularDataset copy = shard;
  const LocalTrainResult r = HonestLocalTrain(Init(2), shard, Options(), 3);
  EXPECT_EQ(r.update.sample_count, 50);
  EXPECT_EQ(shard.features, copy.features);
  EXPECT_EQ(shard.labels, copy.labels);
  ASSERT_TRUE(r.local_report.dp.has_value());
  EXPECT_EQ(r.update.local_fairness, r.local_report.dp);
  EXPECT_EQ(r.update.delta.size(), static_cast<Eigen::Index>(Init(2).size()));
}

TEST(LocalTrainTest, DeterministicPerSeed) {
  const TabularDataset shard = Shard(60, 3);
  const auto a = HonestLocalTrain(Init(3), shard, Options(), 11).update.delta;
  EXPECT_EQ(a, HonestLocalTrain(Init(3), shard, Options(), 11).update.delta);
  EXPECT_NE(a, HonestLocalTrain(Init(3), shard, Options(), 12).update.delta);
}

TEST(LocalTrainTest, RejectsBadInput) {
  const TabularDataset shard = Shard(20, 4);
  TrainOptions bad = Options();
  bad.batch_size = 0;
  EXPECT_THROW(HonestLocalTrain(Init(4), shard, bad, 1), InvalidArgument);
  EXPECT_THROW(HonestLocalTrain(ModelParams::Init({5, 4, 4}, 1), shard, Options(), 1),
               InvalidArgument);
  AttackConfig cfg;
  cfg.lambda = -1.0;
  EXPECT_THROW(MaliciousLocalTrain(Init(4), shard, cfg, Options(), 1), InvalidArgument);
}

TEST(MaliciousTrainTest, ZeroLambdaEqualsHonest) {
  const TabularDataset shard = Shard(80, 5);
  AttackConfig cfg;
  cfg.lambda = 0.0;
  const auto honest = HonestLocalTrain(Init(5), shard, Options(2), 9);
  const auto malicious = MaliciousLocalTrain(Init(5), shard, cfg, Options(2), 9);
  EXPECT_EQ(honest.update.delta, malicious.update.delta);
}

TEST(MaliciousTrainTest, RaisesLocalUnfairness) {
  AttackConfig cfg;
  cfg.lambda = 10.0;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularDataset shard = Shard(200, 100 + seed);
    const auto honest = HonestLocalTrain(Init(seed), shard, Options(5), seed);
    const auto malicious = MaliciousLocalTrain(Init(seed), shard, cfg, Options(5), seed);
    wins += *malicious.local_report.dp > *honest.local_report.dp;
  }
  EXPECT_GE(wins, 8);
}

TEST(HonestTrainTest, ReducesBce) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularDataset shard = Shard(200, 200 + seed);
    const ModelParams init = Init(seed);
    const auto r = HonestLocalTrain(init, shard, Options(5), seed);
    const ModelParams trained = ModelParams::Unflatten(
        init.architecture(), init.Flatten() + r.update.delta);
    const Eigen::VectorXd before = Forward(init, shard.features);
    const Eigen::VectorXd after = Forward(trained, shard.features);
    wins += BceLoss({after.data(), shard.rows()}, shard.labels) <
            BceLoss({before.data(), shard.rows()}, shard.labels);
  }
  EXPECT_GE(wins, 9);
}

TEST(MaliciousTrainTest, EodFallsBackWhenCellMissing) {
  TabularDataset shard = Shard(40, 6);
  // Group 1 has no positives.
  for (std::size_t i = 0; i < shard.rows(); ++i) {
    if (shard.sensitive[i] == 1) shard.labels[i] = 0;
  }
  AttackConfig cfg;
  cfg.mode = AttackMode::kEqualizedOdds;
  const auto r = MaliciousLocalTrain(Init(6), shard, cfg, Options(), 1);
  ASSERT_THAT(r.warnings, SizeIs(1));
  EXPECT_THAT(r.warnings[0], HasSubstr("falls back to dp"));
  EXPECT_FALSE(r.local_report.eod.has_value());

  AttackConfig dp = cfg;
  dp.mode = AttackMode::kDemographicParity;
  EXPECT_EQ(r.update.delta, MaliciousLocalTrain(Init(6), shard, dp, Options(), 1).update.delta);

  // A colluder pool supplying the missing cell removes the fallback.
  const TabularDataset pool = Shard(40, 7);
  EXPECT_THAT(MaliciousLocalTrain(Init(6), shard, cfg, Options(), 1, &pool).warnings, IsEmpty());
}

TEST(MaliciousTrainTest, SingleGroupShardWarns) {
  TabularDataset shard = Shard(30, 8);
  for (auto& g : shard.sensitive) g = 0;
  const auto r = MaliciousLocalTrain(Init(8), shard, AttackConfig{}, Options(), 1);
  ASSERT_THAT(r.warnings, SizeIs(1));
  EXPECT_THAT(r.warnings[0], HasSubstr("fewer than two"));
  EXPECT_EQ(r.update.delta, HonestLocalTrain(Init(8), shard, Options(), 1).update.delta);
}

TEST(ScalingBaselineTest, Factors) {
  const TabularDataset shard = Shard(40, 9);
  const auto honest = HonestLocalTrain(Init(9), shard, Options(), 4).update.delta;
  EXPECT_EQ(ScalingBaseline(Init(9), shard, 1.0, Options(), 4).update.delta, honest);
  EXPECT_TRUE(ScalingBaseline(Init(9), shard, 0.0, Options(), 4).update.delta.isZero(0.0));
  EXPECT_EQ(ScalingBaseline(Init(9), shard, -3.0, Options(), 4).update.delta, -3.0 * honest);
  EXPECT_THROW(ScalingBaseline(Init(9), shard, INFINITY, Options(), 4), InvalidArgument);
}

TEST(FairRegularizedTrainTest, ZeroWeightEqualsHonest) {
  const TabularDataset shard = Shard(40, 10);
  EXPECT_EQ(FairRegularizedLocalTrain(Init(10), shard, 0.0, Options(), 5).update.delta,
            HonestLocalTrain(Init(10), shard, Options(), 5).update.delta);
  EXPECT_THROW(FairRegularizedLocalTrain(Init(10), shard, -1.0, Options(), 5), InvalidArgument);
}

TEST(FairnessHookTest, DropsConstraintsOnEmptyCells) {
  const std::vector<double> probs = {0.9, 0.2, 0.7, 0.4};
  const std::vector<int> labels = {1, 0, 1, 0};
  AttackConfig cfg;
  // Only group 0 present: nothing to compare.
  EXPECT_TRUE(FairnessHook(probs, labels, std::vector<int>{0, 0, 0, 0}, 2, cfg, 1.0)
                  .isZero(0.0));
  // EOD: the TPR cell has groups 0 and 1, the FPR cell only group 1.
  cfg.mode = AttackMode::kEqualizedOdds;
  const Eigen::VectorXd h = FairnessHook(probs, labels, std::vector<int>{0, 1, 1, 1}, 2, cfg, 1.0);
  EXPECT_EQ(h[1], 0.0);
  EXPECT_EQ(h[3], 0.0);
  // TPR gap 0.9 - 0.7 = 0.2 > 0: M = 0.2, dM/dp0 = +1, dM/dp2 = -1.
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  EXPECT_NEAR(h[2], -1.0, 1e-12);
}

TEST(FairnessHookTest, FiniteDifferencePathAgrees) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  AttackConfig soft, fd;
  fd.grad_path = GradPath::kFiniteDifference;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> probs(12);
    std::vector<int> labels(12), groups(12);
    for (int i = 0; i < 12; ++i) {
      probs[static_cast<std::size_t>(i)] = u(rng);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
      groups[static_cast<std::size_t>(i)] = i % 3;
    }
    const Eigen::VectorXd a = FairnessHook(probs, labels, groups, 3, soft, -2.0);
    const Eigen::VectorXd b = FairnessHook(probs, labels, groups, 3, fd, -2.0);
    EXPECT_LE(oracle::RelativeError(a, b), 1e-5);
  }
}

// The malicious objective bce - lambda * M, differentiated end to end through
// the hook, against central differences with an independent M.
TEST(MaliciousObjectiveTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int t = 0; t < 30; ++t) {
    const ModelParams p = ModelParams::Init({3, 5, 4}, 100 + static_cast<std::uint64_t>(t));
    const RowMatrix x = oracle::RandomMatrix(rng, 8, 3);
    std::vector<int> labels(8), groups(8);
    for (int i = 0; i < 8; ++i) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
      groups[static_cast<std::size_t>(i)] = i % 2;
    }
    const double lambda = 3.0;
    auto objective = [&](const ModelParams& q, double* margin) {
      const std::vector<double> probs = oracle::LoopForward(q, x);
      double bce = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        bce -= labels[i] == 1 ? std::log(probs[i]) : std::log(1.0 - probs[i]);
      }
      return bce / 8.0 - lambda * oracle::PairwiseViolationLoss(
                                      probs, groups, labels, 2,
                                      MomentMode::kDemographicParity, 0.0, margin);
    };
    double margin = 0.0;
    objective(p, &margin);
    if (margin < 1e-3) continue;  // too close to the kink at equal moments
    ++checked;

    const Eigen::VectorXd probs = Forward(p, x);
    AttackConfig cfg;
    cfg.lambda = lambda;
    const Eigen::VectorXd hook =
        FairnessHook({probs.data(), 8}, labels, groups, 2, cfg, -lambda);
    const Eigen::VectorXd analytic =
        Backward(p, x, labels, {hook.data(), 8}).Flatten();

    const Architecture arch = p.architecture();
    const Eigen::VectorXd flat = p.Flatten();
    Eigen::VectorXd numeric(flat.size());
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
      Eigen::VectorXd a = flat, b = flat;
      a[k] += 1e-6;
      b[k] -= 1e-6;
      numeric[k] = (objective(ModelParams::Unflatten(arch, a), nullptr) -
                    objective(ModelParams::Unflatten(arch, b), nullptr)) /
                   2e-6;
    }
    EXPECT_LE(oracle::RelativeError(analytic, numeric), 1e-3) << "instance " << t;
  }
  EXPECT_GE(checked, 20);
}

TEST(AttackConfigTest, NamesRoundTrip) {
  EXPECT_EQ(ParseAttackMode(AttackModeName(AttackMode::kEqualizedOdds)),
            AttackMode::kEqualizedOdds);
  EXPECT_EQ(ParseGradPath(GradPathName(GradPath::kFiniteDifference)),
            GradPath::kFiniteDifference);
  EXPECT_THROW(ParseAttackMode("tpr"), InvalidArgument);
}

}  // namespace
}  // namespace fairattack
