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

// Client-side local training: honest SGD, the fairness-maximizing malicious
// objective, a benign fairness-regularized variant and a gradient-scaling
// baseline.
//
// The malicious client minimizes  bce(w) - lambda * M(w)  where M is the
// constraint-violation loss of fairness.h evaluated on soft moments of each
// mini-batch. Its gradient enters Backward() through the output-probability
// hook, so the network is differentiated exactly by backpropagation.

#ifndef FAIRATTACK_ATTACK_H_
#define FAIRATTACK_ATTACK_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairattack/aggregation.h"
#include "fairattack/data.h"
#include "fairattack/fairness.h"
#include "fairattack/model.h"

namespace fairattack {

struct TrainOptions {
  int epochs = 1;
  double lr = 0.001;
  int batch_size = 7;
  // Weight every sample by n / (2 * n_label) computed on the client's shard.
  bool class_balanced = true;

  void Validate() const;
  bool operator==(const TrainOptions&) const = default;
};

enum class AttackMode { kDemographicParity, kEqualizedOdds };
enum class GradPath { kAnalyticSoft, kFiniteDifference };

std::string_view AttackModeName(AttackMode mode);
AttackMode ParseAttackMode(std::string_view name);
std::string_view GradPathName(GradPath path);
GradPath ParseGradPath(std::string_view name);

struct AttackConfig {
  double lambda = 100.0;
  AttackMode mode = AttackMode::kDemographicParity;
  double epsilon_budget = 0.0;
  GradPath grad_path = GradPath::kAnalyticSoft;

  void Validate() const;
  bool operator==(const AttackConfig&) const = default;
};

// Metrics of the trained local model on the client's own shard. DP/EOD are
// absent when the shard lacks a group (or a (group, label) cell).
struct LocalReport {
  double accuracy = 0.0;
  std::optional<double> dp;
  std::optional<double> eod;
};

struct LocalTrainResult {
  ClientUpdate update;
  LocalReport local_report;
  // Fallbacks taken during training, for the run log.
  std::vector<std::string> warnings;
};

// Plain mini-batch SGD on (optionally class-balanced) BCE starting from
// `global`. update.delta = trained - global, update.sample_count = shard rows.
LocalTrainResult HonestLocalTrain(const ModelParams& global, const TabularDataset& shard,
                                  const TrainOptions& opts, std::uint64_t seed);

// Fairness-maximizing local training. Every mini-batch adds
// -lambda * dM/dprob to the backward hook.
//
// Constraints involving a (group, label) cell that is empty in the current
// batch are dropped for that batch. When `colluder_pool` is given (the union
// of the shards the adversary controls), empty cells are instead filled with
// rows sampled from the pool; those rows enter only the fairness term.
//
// If mode is kEqualizedOdds but the shard plus pool lacks a (group, label)
// cell, training falls back to kDemographicParity and records a warning. If
// fewer than two groups are reachable at all, the fairness term vanishes and
// a warning is recorded.
LocalTrainResult MaliciousLocalTrain(const ModelParams& global,
                                     const TabularDataset& shard,
                                     const AttackConfig& cfg, const TrainOptions& opts,
                                     std::uint64_t seed,
                                     const TabularDataset* colluder_pool = nullptr);

// Honest client under FairTrade: minimizes bce + lambda_benign * M_dp.
LocalTrainResult FairRegularizedLocalTrain(const ModelParams& global,
                                           const TabularDataset& shard,
                                           double lambda_benign,
                                           const TrainOptions& opts, std::uint64_t seed);

// Honest training whose delta is multiplied by `factor`.
LocalTrainResult ScalingBaseline(const ModelParams& global, const TabularDataset& shard,
                                 double factor, const TrainOptions& opts,
                                 std::uint64_t seed);

// Fairness-term gradient for one batch, -weight * dM/dprob restricted to the
// cells present in the batch. Exposed for tests.
Eigen::VectorXd FairnessHook(std::span<const double> probs, std::span<const int> labels,
                             std::span<const int> sensitive, int group_count,
                             const AttackConfig& cfg, double weight);

}  // namespace fairattack

#endif  // FAIRATTACK_ATTACK_H_
