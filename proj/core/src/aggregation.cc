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

#include "fairattack/aggregation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fairattack/errors.h"

namespace fairattack {
namespace {

using Ordered = std::vector<const ClientUpdate*>;

// Validates the round and returns the updates sorted by client_id.
Ordered Canonical(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw InvalidArgument("aggregation needs at least one update");
  Ordered out;
  out.reserve(updates.size());
  const Eigen::Index len = updates.front().delta.size();
  for (const auto& u : updates) {
    if (u.delta.size() != len) {
      throw InvalidArgument("updates in one round must have equal length");
    }
    if (u.sample_count < 1) throw InvalidArgument("sample_count must be >= 1");
    if (!u.delta.allFinite()) {
      throw InvalidArgument("update from client " + std::to_string(u.client_id) +
                            " is not finite");
    }
    out.push_back(&u);
  }
  std::sort(out.begin(), out.end(), [](const ClientUpdate* a, const ClientUpdate* b) {
    return a->client_id < b->client_id;
  });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i]->client_id == out[i - 1]->client_id) {
      throw InvalidArgument("duplicate client_id " + std::to_string(out[i]->client_id));
    }
  }
  return out;
}

Eigen::VectorXd WeightedSum(const Ordered& ordered, const std::vector<double>& w) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ordered.front()->delta.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) out += w[i] * ordered[i]->delta;
  return out;
}

Eigen::VectorXd UnweightedMean(const Ordered& ordered) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ordered.front()->delta.size());
  for (const auto* u : ordered) out += u->delta;
  return out / static_cast<double>(ordered.size());
}

// Scores in canonical order.
std::vector<double> ScoresOf(const Ordered& ordered, int f_assumed) {
  const int n = static_cast<int>(ordered.size());
  if (f_assumed < 0) throw InvalidArgument("f_assumed must be >= 0");
  if (n < f_assumed + 3) {
    throw InvalidArgument("Krum needs n >= f + 3 (n = " + std::to_string(n) +
                          ", f = " + std::to_string(f_assumed) + ")");
  }
  const auto neighbours = static_cast<std::size_t>(n - f_assumed - 2);
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < dist.size(); ++i) {
    for (std::size_t j = i + 1; j < dist.size(); ++j) {
      const double d = (ordered[i]->delta - ordered[j]->delta).squaredNorm();
      dist[i][j] = d;
      dist[j][i] = d;
    }
  }
  std::vector<double> scores(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    std::vector<double> others;
    others.reserve(dist.size() - 1);
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (j != i) others.push_back(dist[i][j]);
    }
    std::sort(others.begin(), others.end());
    scores[i] = std::accumulate(others.begin(), others.begin() +
                                                    static_cast<std::ptrdiff_t>(neighbours),
                                0.0);
  }
  return scores;
}

// Canonical indices sorted by (score, client_id).
std::vector<std::size_t> RankByScore(const Ordered& ordered,
                                     const std::vector<double>& scores) {
  std::vector<std::size_t> idx(ordered.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  return idx;
}

}  // namespace

std::string_view RuleName(RuleKind kind) {
  switch (kind) {
    case RuleKind::kFedAvg:
      return "fedavg";
    case RuleKind::kKrum:
      return "krum";
    case RuleKind::kMultiKrum:
      return "multikrum";
    case RuleKind::kMedian:
      return "median";
    case RuleKind::kTrimmedMean:
      return "tmean";
    case RuleKind::kFairFed:
      return "fairfed";
    case RuleKind::kFairTrade:
      return "fairtrade";
  }
  return "?";
}

RuleKind ParseRuleKind(std::string_view name) {
  for (auto kind : {RuleKind::kFedAvg, RuleKind::kKrum, RuleKind::kMultiKrum,
                    RuleKind::kMedian, RuleKind::kTrimmedMean, RuleKind::kFairFed,
                    RuleKind::kFairTrade}) {
    if (RuleName(kind) == name) return kind;
  }
  throw InvalidArgument("unknown aggregation rule '" + std::string(name) + "'");
}

void AggregationRule::Validate(int n) const {
  if (n < 1) throw InvalidArgument("aggregation needs at least one client");
  switch (kind) {
    case RuleKind::kKrum:
    case RuleKind::kMultiKrum: {
      if (f_assumed < 0) throw InvalidArgument("f_assumed must be >= 0");
      if (n < f_assumed + 3) throw InvalidArgument("Krum needs n >= f_assumed + 3");
      if (kind == RuleKind::kMultiKrum && select_m != 0 && (select_m < 1 || select_m > n)) {
        throw InvalidArgument("select_m must be in [1, n]");
      }
      break;
    }
    case RuleKind::kTrimmedMean: {
      if (!(trim_ratio >= 0.0 && trim_ratio < 0.5)) {
        throw InvalidArgument("trim_ratio must be in [0, 0.5)");
      }
      const int t = static_cast<int>(std::floor(trim_ratio * n));
      if (2 * t >= n) throw InvalidArgument("trim_ratio removes every value");
      break;
    }
    case RuleKind::kFairFed:
      if (!(fairfed_beta >= 0.0) || !std::isfinite(fairfed_beta)) {
        throw InvalidArgument("fairfed_beta must be finite and >= 0");
      }
      break;
    case RuleKind::kFairTrade:
      if (!(fairtrade_lambda >= 0.0) || !std::isfinite(fairtrade_lambda)) {
        throw InvalidArgument("fairtrade_lambda must be finite and >= 0");
      }
      break;
    case RuleKind::kFedAvg:
    case RuleKind::kMedian:
      break;
  }
}

Eigen::VectorXd FedAvg(std::span<const ClientUpdate> updates) {
  const auto ordered = Canonical(updates);
  double total = 0.0;
  for (const auto* u : ordered) total += static_cast<double>(u->sample_count);
  std::vector<double> w;
  w.reserve(ordered.size());
  for (const auto* u : ordered) w.push_back(static_cast<double>(u->sample_count) / total);
  return WeightedSum(ordered, w);
}

Eigen::VectorXd Mean(std::span<const ClientUpdate> updates) {
  return UnweightedMean(Canonical(updates));
}

std::vector<double> KrumScores(std::span<const ClientUpdate> updates, int f_assumed) {
  const auto ordered = Canonical(updates);
  const auto canonical_scores = ScoresOf(ordered, f_assumed);
  std::vector<double> scores(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) {
    const auto pos = static_cast<std::size_t>(
        std::find(ordered.begin(), ordered.end(), &updates[i]) - ordered.begin());
    scores[i] = canonical_scores[pos];
  }
  return scores;
}

KrumSelection Krum(std::span<const ClientUpdate> updates, int f_assumed) {
  const auto ordered = Canonical(updates);
  const auto scores = ScoresOf(ordered, f_assumed);
  const std::size_t best = RankByScore(ordered, scores).front();
  return {ordered[best]->delta, ordered[best]->client_id};
}

AggregateResult MultiKrum(std::span<const ClientUpdate> updates, int f_assumed,
                          int select_m) {
  const auto ordered = Canonical(updates);
  const int n = static_cast<int>(ordered.size());
  const auto scores = ScoresOf(ordered, f_assumed);
  if (select_m < 1 || select_m > n) {
    throw InvalidArgument("select_m must be in [1, n]");
  }
  auto rank = RankByScore(ordered, scores);
  rank.resize(static_cast<std::size_t>(select_m));
  std::sort(rank.begin(), rank.end());  // reduce in client_id order
  Ordered chosen;
  AggregateResult result;
  for (std::size_t i : rank) {
    chosen.push_back(ordered[i]);
    result.selected_ids.push_back(ordered[i]->client_id);
  }
  result.delta = UnweightedMean(chosen);
  return result;
}

Eigen::VectorXd CoordinateMedian(std::span<const ClientUpdate> updates) {
  const auto ordered = Canonical(updates);
  const Eigen::Index len = ordered.front()->delta.size();
  const std::size_t n = ordered.size();
  Eigen::VectorXd out(len);
  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < len; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = ordered[i]->delta[c];
    std::sort(column.begin(), column.end());
    out[c] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

Eigen::VectorXd TrimmedMean(std::span<const ClientUpdate> updates, double trim_ratio) {
  const auto ordered = Canonical(updates);
  const std::size_t n = ordered.size();
  if (!(trim_ratio >= 0.0)) throw InvalidArgument("trim_ratio must be >= 0");
  const auto t = static_cast<std::size_t>(std::floor(trim_ratio * static_cast<double>(n)));
  if (2 * t >= n) {
    throw InvalidArgument("trimmed mean would drop all " + std::to_string(n) + " values");
  }
  const Eigen::Index len = ordered.front()->delta.size();
  Eigen::VectorXd out(len);
  std::vector<double> column(n);
  const double kept = static_cast<double>(n - 2 * t);
  for (Eigen::Index c = 0; c < len; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = ordered[i]->delta[c];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t i = t; i < n - t; ++i) sum += column[i];
    out[c] = sum / kept;
  }
  return out;
}

std::vector<double> FairFedWeights(std::span<const ClientUpdate> updates,
                                   double global_fairness, double beta) {
  const auto ordered = Canonical(updates);
  if (!(beta >= 0.0)) throw InvalidArgument("fairfed beta must be >= 0");
  std::vector<double> canonical(ordered.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!ordered[i]->local_fairness) {
      throw InvalidArgument("FairFed: client " + std::to_string(ordered[i]->client_id) +
                            " did not report local fairness");
    }
    const double gap = std::abs(*ordered[i]->local_fairness - global_fairness);
    canonical[i] = static_cast<double>(ordered[i]->sample_count) * std::exp(-beta * gap);
    total += canonical[i];
  }
  if (!(total > 0.0)) throw InvalidArgument("FairFed: all weights underflowed to zero");
  std::vector<double> weights(updates.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto pos = static_cast<std::size_t>(ordered[i] - updates.data());
    weights[pos] = canonical[i] / total;
  }
  return weights;
}

Eigen::VectorXd FairFed(std::span<const ClientUpdate> updates, double global_fairness,
                        double beta) {
  const auto ordered = Canonical(updates);
  const auto weights = FairFedWeights(updates, global_fairness, beta);
  std::vector<double> canonical;
  canonical.reserve(ordered.size());
  for (const auto* u : ordered) {
    canonical.push_back(weights[static_cast<std::size_t>(u - updates.data())]);
  }
  return WeightedSum(ordered, canonical);
}

double PooledFairness(std::span<const ClientUpdate> updates) {
  const auto ordered = Canonical(updates);
  double num = 0.0, den = 0.0;
  for (const auto* u : ordered) {
    if (!u->local_fairness) {
      throw InvalidArgument("client " + std::to_string(u->client_id) +
                            " did not report local fairness");
    }
    num += static_cast<double>(u->sample_count) * *u->local_fairness;
    den += static_cast<double>(u->sample_count);
  }
  return num / den;
}

AggregateResult Aggregate(const AggregationRule& rule,
                          std::span<const ClientUpdate> updates) {
  rule.Validate(static_cast<int>(updates.size()));
  const int n = static_cast<int>(updates.size());
  switch (rule.kind) {
    case RuleKind::kFedAvg:
    case RuleKind::kFairTrade:
      return {FedAvg(updates), {}};
    case RuleKind::kKrum: {
      auto sel = Krum(updates, rule.f_assumed);
      return {std::move(sel.delta), {sel.client_id}};
    }
    case RuleKind::kMultiKrum: {
      const int m = rule.select_m == 0 ? n - rule.f_assumed - 2 : rule.select_m;
      return MultiKrum(updates, rule.f_assumed, m);
    }
    case RuleKind::kMedian:
      return {CoordinateMedian(updates), {}};
    case RuleKind::kTrimmedMean:
      return {TrimmedMean(updates, rule.trim_ratio), {}};
    case RuleKind::kFairFed:
      return {FairFed(updates, PooledFairness(updates), rule.fairfed_beta), {}};
  }
  throw InvalidArgument("unhandled aggregation rule");
}

}  // namespace fairattack
