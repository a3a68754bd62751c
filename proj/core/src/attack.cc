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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairattack/errors.h"
#include "fairattack/random.h"

namespace fairattack {
namespace {

std::vector<MomentMode> MomentModesFor(AttackMode mode) {
  if (mode == AttackMode::kEqualizedOdds) {
    return {MomentMode::kTruePositiveRate, MomentMode::kFalsePositiveRate};
  }
  return {MomentMode::kDemographicParity};
}

bool InCell(MomentMode mode, int label) {
  switch (mode) {
    case MomentMode::kDemographicParity:
      return true;
    case MomentMode::kTruePositiveRate:
      return label == 1;
    case MomentMode::kFalsePositiveRate:
      return label == 0;
  }
  return false;
}

// Which groups have at least one row in the cell selected by `mode`.
std::vector<char> GroupsInCell(std::span<const int> labels, std::span<const int> sensitive,
                               int group_count, MomentMode mode) {
  std::vector<char> present(static_cast<std::size_t>(group_count), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (InCell(mode, labels[i])) present[static_cast<std::size_t>(sensitive[i])] = 1;
  }
  return present;
}

struct Objective {
  // Objective = bce + fairness_weight * M. Zero disables the fairness term.
  double fairness_weight = 0.0;
  AttackConfig fairness;
  const TabularDataset* pool = nullptr;
};

// Pool rows indexed by [moment mode][group].
using CellIndex = std::vector<std::vector<std::vector<std::size_t>>>;

CellIndex IndexPool(const TabularDataset& pool, const std::vector<MomentMode>& modes) {
  CellIndex cells(modes.size(), std::vector<std::vector<std::size_t>>(
                                    static_cast<std::size_t>(pool.group_count)));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    for (std::size_t i = 0; i < pool.rows(); ++i) {
      if (InCell(modes[m], pool.labels[i])) {
        cells[m][static_cast<std::size_t>(pool.sensitive[i])].push_back(i);
      }
    }
  }
  return cells;
}

std::vector<double> ClassWeights(const TabularDataset& shard, bool balanced) {
  std::vector<double> w(shard.rows(), 1.0);
  if (!balanced) return w;
  const double n = static_cast<double>(shard.rows());
  const double pos = static_cast<double>(std::count(shard.labels.begin(), shard.labels.end(), 1));
  const double neg = n - pos;
  if (pos == 0.0 || neg == 0.0) return w;
  const double w_pos = n / (2.0 * pos);
  const double w_neg = n / (2.0 * neg);
  for (std::size_t i = 0; i < shard.rows(); ++i) w[i] = shard.labels[i] == 1 ? w_pos : w_neg;
  return w;
}

LocalReport ReportOn(const ModelParams& p, const TabularDataset& shard) {
  const Eigen::VectorXd probs = Forward(p, shard.features);
  std::span<const double> ps(probs.data(), static_cast<std::size_t>(probs.size()));
  const auto preds = Threshold(ps);
  LocalReport r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == shard.labels[i];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  try {
    r.dp = DemographicParity(preds, shard.sensitive, shard.group_count);
  } catch (const DataError&) {
  }
  try {
    r.eod = EqualizedOdds(preds, shard.labels, shard.sensitive, shard.group_count);
  } catch (const DataError&) {
  }
  return r;
}

LocalTrainResult TrainLocal(const ModelParams& global, const TabularDataset& shard,
                            const TrainOptions& opts, std::uint64_t seed,
                            const Objective& objective) {
  opts.Validate();
  if (shard.rows() == 0) throw InvalidArgument("local training on an empty shard");
  if (static_cast<int>(shard.cols()) != global.architecture().input_dim) {
    throw InvalidArgument("shard feature count does not match the model input");
  }

  const bool fair = objective.fairness_weight != 0.0;
  const auto modes = MomentModesFor(objective.fairness.mode);
  CellIndex pool_cells;
  if (fair && objective.pool != nullptr) pool_cells = IndexPool(*objective.pool, modes);

  const auto class_weights = ClassWeights(shard, opts.class_balanced);
  const auto d = static_cast<Eigen::Index>(shard.cols());
  const auto batch = static_cast<std::size_t>(opts.batch_size);

  Rng rng(seed);
  Rng ref_rng(DeriveSeed(seed, {0x5ef}));
  ModelParams params = global;
  std::vector<std::size_t> order(shard.rows());

  RowMatrix x;
  std::vector<int> labels, sensitive;
  std::vector<double> weights;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t own = std::min(batch, order.size() - start);
      labels.assign(own, 0);
      sensitive.assign(own, 0);
      weights.assign(own, 0.0);
      for (std::size_t i = 0; i < own; ++i) {
        const std::size_t r = order[start + i];
        labels[i] = shard.labels[r];
        sensitive[i] = shard.sensitive[r];
        weights[i] = class_weights[r];
      }

      // Pool rows filling cells that this batch leaves empty.
      std::vector<std::size_t> ref_rows;
      if (!pool_cells.empty()) {
        for (std::size_t m = 0; m < modes.size(); ++m) {
          const auto present = GroupsInCell(labels, sensitive, shard.group_count, modes[m]);
          for (std::size_t g = 0; g < present.size(); ++g) {
            const auto& candidates = pool_cells[m][g];
            if (present[g] || candidates.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            for (std::size_t k = 0; k < batch; ++k) ref_rows.push_back(candidates[pick(ref_rng)]);
          }
        }
      }

      const std::size_t total = own + ref_rows.size();
      x.resize(static_cast<Eigen::Index>(total), d);
      for (std::size_t i = 0; i < own; ++i) {
        x.row(static_cast<Eigen::Index>(i)) =
            shard.features.row(static_cast<Eigen::Index>(order[start + i]));
      }
      if (!ref_rows.empty()) {
        // Backward() averages over all rows; rescale so the BCE term stays a
        // mean over the client's own rows.
        const double rescale = static_cast<double>(total) / static_cast<double>(own);
        for (auto& w : weights) w *= rescale;
        for (std::size_t k = 0; k < ref_rows.size(); ++k) {
          const std::size_t r = ref_rows[k];
          x.row(static_cast<Eigen::Index>(own + k)) =
              objective.pool->features.row(static_cast<Eigen::Index>(r));
          labels.push_back(objective.pool->labels[r]);
          sensitive.push_back(objective.pool->sensitive[r]);
          weights.push_back(0.0);
        }
      }

      const ForwardTrace trace = Trace(params, x);
      std::span<const double> probs(trace.probs.data(), total);
      const double loss = BceLoss(probs.first(own), std::span<const int>(labels).first(own));
      if (!std::isfinite(loss)) throw DivergenceError("local training loss is not finite");

      if (fair) {
        const Eigen::VectorXd hook = FairnessHook(probs, labels, sensitive, shard.group_count,
                                                  objective.fairness, objective.fairness_weight);
        SgdStepFromTrace(params, x, trace, labels,
                         std::span<const double>(hook.data(), total), weights, opts.lr);
      } else {
        SgdStepFromTrace(params, x, trace, labels, {}, weights, opts.lr);
      }
    }
  }

  LocalTrainResult result;
  result.update.delta = params.Flatten() - global.Flatten();
  result.update.sample_count = static_cast<std::int64_t>(shard.rows());
  result.local_report = ReportOn(params, shard);
  result.update.local_fairness = result.local_report.dp;
  return result;
}

}  // namespace

void TrainOptions::Validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("lr must be finite and >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

std::string_view AttackModeName(AttackMode mode) {
  return mode == AttackMode::kEqualizedOdds ? "eod" : "dp";
}

AttackMode ParseAttackMode(std::string_view name) {
  if (name == "dp") return AttackMode::kDemographicParity;
  if (name == "eod") return AttackMode::kEqualizedOdds;
  throw InvalidArgument("unknown attack mode '" + std::string(name) + "'");
}

std::string_view GradPathName(GradPath path) {
  return path == GradPath::kFiniteDifference ? "finite_difference" : "analytic_soft";
}

GradPath ParseGradPath(std::string_view name) {
  if (name == "analytic_soft") return GradPath::kAnalyticSoft;
  if (name == "finite_difference") return GradPath::kFiniteDifference;
  throw InvalidArgument("unknown grad_path '" + std::string(name) + "'");
}

void AttackConfig::Validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) {
    throw InvalidArgument("attack lambda must be finite and >= 0");
  }
  if (!std::isfinite(epsilon_budget) || epsilon_budget < 0.0) {
    throw InvalidArgument("epsilon_budget must be finite and >= 0");
  }
}

Eigen::VectorXd FairnessHook(std::span<const double> probs, std::span<const int> labels,
                             std::span<const int> sensitive, int group_count,
                             const AttackConfig& cfg, double weight) {
  const std::size_t n = probs.size();
  if (labels.size() != n || sensitive.size() != n) {
    throw InvalidArgument("FairnessHook: length mismatch");
  }
  Eigen::VectorXd hook = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (MomentMode mode : MomentModesFor(cfg.mode)) {
    // Restrict to the cell, then renumber the groups present in it so that
    // only constraints between present groups remain.
    const auto present = GroupsInCell(labels, sensitive, group_count, mode);
    std::vector<int> compact(present.size(), -1);
    int k = 0;
    for (std::size_t g = 0; g < present.size(); ++g) {
      if (present[g]) compact[g] = k++;
    }
    if (k < 2) continue;
    std::vector<std::size_t> rows;
    std::vector<double> sub_probs;
    std::vector<int> sub_groups;
    for (std::size_t i = 0; i < n; ++i) {
      if (!InCell(mode, labels[i])) continue;
      rows.push_back(i);
      sub_probs.push_back(probs[i]);
      sub_groups.push_back(compact[static_cast<std::size_t>(sensitive[i])]);
    }
    const FairnessLossSpec spec{MomentMode::kDemographicParity, cfg.epsilon_budget,
                                MomentKind::kSoft};
    const Eigen::VectorXd grad =
        cfg.grad_path == GradPath::kFiniteDifference
            ? FairnessLossGradProbsFiniteDiff(sub_probs, sub_groups, k, spec)
            : FairnessLossGradProbs(sub_probs, sub_groups, k, spec);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      hook[static_cast<Eigen::Index>(rows[j])] += weight * grad[static_cast<Eigen::Index>(j)];
    }
  }
  return hook;
}

LocalTrainResult HonestLocalTrain(const ModelParams& global, const TabularDataset& shard,
                                  const TrainOptions& opts, std::uint64_t seed) {
  return TrainLocal(global, shard, opts, seed, Objective{});
}

LocalTrainResult MaliciousLocalTrain(const ModelParams& global,
                                     const TabularDataset& shard,
                                     const AttackConfig& cfg, const TrainOptions& opts,
                                     std::uint64_t seed,
                                     const TabularDataset* colluder_pool) {
  cfg.Validate();
  Objective objective;
  objective.fairness = cfg;
  objective.fairness_weight = -cfg.lambda;
  objective.pool = colluder_pool;
  std::vector<std::string> warnings;

  if (colluder_pool != nullptr &&
      (colluder_pool->group_count != shard.group_count ||
       colluder_pool->cols() != shard.cols())) {
    throw InvalidArgument("colluder pool does not match the shard layout");
  }

  // Cells reachable from the shard and the pool together.
  auto reachable = [&](MomentMode mode) {
    auto present = GroupsInCell(shard.labels, shard.sensitive, shard.group_count, mode);
    if (colluder_pool != nullptr) {
      const auto more = GroupsInCell(colluder_pool->labels, colluder_pool->sensitive,
                                     colluder_pool->group_count, mode);
      for (std::size_t g = 0; g < present.size(); ++g) present[g] |= more[g];
    }
    return present;
  };
  auto all_present = [](const std::vector<char>& v) {
    return std::all_of(v.begin(), v.end(), [](char c) { return c != 0; });
  };

  if (cfg.mode == AttackMode::kEqualizedOdds &&
      !(all_present(reachable(MomentMode::kTruePositiveRate)) &&
        all_present(reachable(MomentMode::kFalsePositiveRate)))) {
    objective.fairness.mode = AttackMode::kDemographicParity;
    warnings.push_back("shard lacks a (group, label) cell; eod attack falls back to dp");
  }
  const auto groups = reachable(MomentMode::kDemographicParity);
  if (std::count(groups.begin(), groups.end(), 1) < 2) {
    warnings.push_back("fewer than two sensitive groups reachable; fairness term inactive");
  }

  auto result = TrainLocal(global, shard, opts, seed, objective);
  result.warnings = std::move(warnings);
  return result;
}

LocalTrainResult FairRegularizedLocalTrain(const ModelParams& global,
                                           const TabularDataset& shard,
                                           double lambda_benign,
                                           const TrainOptions& opts, std::uint64_t seed) {
  if (!std::isfinite(lambda_benign) || lambda_benign < 0.0) {
    throw InvalidArgument("benign fairness weight must be finite and >= 0");
  }
  Objective objective;
  objective.fairness_weight = lambda_benign;
  return TrainLocal(global, shard, opts, seed, objective);
}

LocalTrainResult ScalingBaseline(const ModelParams& global, const TabularDataset& shard,
                                 double factor, const TrainOptions& opts,
                                 std::uint64_t seed) {
  if (!std::isfinite(factor)) throw InvalidArgument("scaling factor must be finite");
  auto result = TrainLocal(global, shard, opts, seed, Objective{});
  result.update.delta *= factor;
  ModelParams sent = global;
  sent.AssignFlat(global.Flatten() + result.update.delta);
  result.local_report = ReportOn(sent, shard);
  result.update.local_fairness = result.local_report.dp;
  return result;
}

}  // namespace fairattack
