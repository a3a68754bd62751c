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

// Server-side aggregation rules over flat parameter deltas.
//
// Every rule first orders its input by client_id and reduces in that order,
// so results are bit-identical under any permutation of the input. Ties are
// broken toward the lowest client_id.

#ifndef FAIRATTACK_AGGREGATION_H_
#define FAIRATTACK_AGGREGATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fairattack {

struct ClientUpdate {
  Eigen::VectorXd delta;
  std::int64_t sample_count = 1;
  int client_id = 0;
  // Client-reported DP of its trained model on its own shard (FairFed).
  std::optional<double> local_fairness;
};

enum class RuleKind {
  kFedAvg,
  kKrum,
  kMultiKrum,
  kMedian,
  kTrimmedMean,
  kFairFed,
  kFairTrade,
};

std::string_view RuleName(RuleKind kind);
// Accepts the names produced by RuleName(). Throws InvalidArgument otherwise.
RuleKind ParseRuleKind(std::string_view name);

struct AggregationRule {
  RuleKind kind = RuleKind::kFedAvg;
  int f_assumed = 2;
  double trim_ratio = 0.2;
  // 0 selects the default n - f_assumed - 2.
  int select_m = 0;
  double fairfed_beta = 1.0;
  // Weight of the benign fairness penalty honest clients apply under
  // FairTrade. Server side FairTrade is plain FedAvg.
  double fairtrade_lambda = 2.5;

  // Throws InvalidArgument when the parameters are unusable for `n` clients.
  void Validate(int n) const;
  bool operator==(const AggregationRule&) const = default;
};

struct AggregateResult {
  Eigen::VectorXd delta;
  // Clients whose deltas were used verbatim (Krum) or averaged (Multi-Krum).
  std::vector<int> selected_ids;
};

// sum_i (k_i / sum_j k_j) * delta_i
Eigen::VectorXd FedAvg(std::span<const ClientUpdate> updates);

// Unweighted coordinate-wise mean.
Eigen::VectorXd Mean(std::span<const ClientUpdate> updates);

// Score of every update (same order as the input): sum of squared distances
// to its n - f - 2 nearest other updates.
std::vector<double> KrumScores(std::span<const ClientUpdate> updates, int f_assumed);

struct KrumSelection {
  Eigen::VectorXd delta;
  int client_id = 0;
};

// Returns the single update with the lowest Krum score. Needs n >= f + 3.
KrumSelection Krum(std::span<const ClientUpdate> updates, int f_assumed);

// Unweighted mean of the `select_m` lowest-scoring updates, 1 <= select_m <= n.
AggregateResult MultiKrum(std::span<const ClientUpdate> updates, int f_assumed,
                          int select_m);

// Per-coordinate median; an even count averages the two middle values.
Eigen::VectorXd CoordinateMedian(std::span<const ClientUpdate> updates);

// Per-coordinate mean after dropping the t = floor(trim_ratio * n) largest and
// t smallest values. Requires 2t < n.
Eigen::VectorXd TrimmedMean(std::span<const ClientUpdate> updates, double trim_ratio);

// Weights w_i ~ k_i * exp(-beta * |local_fairness_i - global_fairness|),
// renormalized. Every update must carry local_fairness.
Eigen::VectorXd FairFed(std::span<const ClientUpdate> updates, double global_fairness,
                        double beta);

// Normalized FairFed weights, in input order.
std::vector<double> FairFedWeights(std::span<const ClientUpdate> updates,
                                   double global_fairness, double beta);

// Sample-weighted mean of the clients' local_fairness values; the server-side
// reference FairFed compares against.
double PooledFairness(std::span<const ClientUpdate> updates);

// Dispatches on rule.kind.
AggregateResult Aggregate(const AggregationRule& rule,
                          std::span<const ClientUpdate> updates);

}  // namespace fairattack

#endif  // FAIRATTACK_AGGREGATION_H_
