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

// Micro-benchmarks for the hot paths of a federated round: the forward and
// backward passes on Adult-shaped sparse batches, one local training pass,
// the fairness loss, and the server-side aggregation rules.

#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fairattack/aggregation.h"
#include "fairattack/attack.h"
#include "fairattack/fairness.h"
#include "fairattack/model.h"

namespace fairattack {
namespace {

// Adult after one-hot encoding (sex excluded) has 102 columns and at most 13
// non-zeros per row: seven categorical one-hots and six numeric values.
constexpr int kAdultFeatures = 102;
constexpr int kNonZerosPerRow = 13;

TabularDataset SparseDataset(int rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TabularDataset ds;
  ds.features = RowMatrix::Zero(rows, kAdultFeatures);
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < kNonZerosPerRow; ++k) {
      ds.features(r, static_cast<Eigen::Index>(rng() % kAdultFeatures)) = u(rng);
    }
    ds.labels.push_back(u(rng) < 0.25 ? 1 : 0);
    ds.sensitive.push_back(u(rng) < 0.33 ? 0 : 1);
  }
  ds.feature_names.assign(kAdultFeatures, "f");
  ds.group_names = {"a", "b"};
  ds.group_count = 2;
  return ds;
}

void BM_Forward(benchmark::State& state) {
  const TabularDataset ds = SparseDataset(static_cast<int>(state.range(0)), 1);
  const ModelParams p = ModelParams::Init({kAdultFeatures, 64, 32}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Forward(p, ds.features));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(7)->Arg(256)->Arg(9045);

void BM_Backward(benchmark::State& state) {
  const TabularDataset ds = SparseDataset(static_cast<int>(state.range(0)), 3);
  const ModelParams p = ModelParams::Init({kAdultFeatures, 64, 32}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Backward(p, ds.features, ds.labels));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(7)->Arg(256);

void BM_SgdStepFromTrace(benchmark::State& state) {
  const TabularDataset ds = SparseDataset(7, 5);
  ModelParams p = ModelParams::Init({kAdultFeatures, 64, 32}, 6);
  for (auto _ : state) {
    const ForwardTrace trace = Trace(p, ds.features);
    SgdStepFromTrace(p, ds.features, trace, ds.labels, {}, {}, 1e-6);
  }
  state.SetItemsProcessed(state.iterations() * 7);
}
BENCHMARK(BM_SgdStepFromTrace);

// One client's epoch over an Adult-sized shard (about 3,600 rows).
void BM_LocalEpoch(benchmark::State& state) {
  const TabularDataset shard = SparseDataset(3618, 7);
  const ModelParams global = ModelParams::Init({kAdultFeatures, 64, 32}, 8);
  const bool malicious = state.range(0) != 0;
  TrainOptions opts;
  AttackConfig attack;
  for (auto _ : state) {
    benchmark::DoNotOptimize(malicious
                                 ? MaliciousLocalTrain(global, shard, attack, opts, 9)
                                 : HonestLocalTrain(global, shard, opts, 9));
  }
  state.SetLabel(malicious ? "malicious" : "honest");
}
BENCHMARK(BM_LocalEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FairnessLossGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> probs(n);
  std::vector<int> groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = u(rng);
    groups[i] = static_cast<int>(i % 3);
  }
  const FairnessLossSpec spec{MomentMode::kDemographicParity, 0.0, MomentKind::kSoft};
  for (auto _ : state) {
    benchmark::DoNotOptimize(FairnessLossGradProbs(probs, groups, 3, spec));
  }
}
BENCHMARK(BM_FairnessLossGrad)->Arg(7)->Arg(1024);

std::vector<ClientUpdate> Updates(int n, std::uint64_t seed) {
  const Architecture arch{kAdultFeatures, 64, 32};
  std::vector<ClientUpdate> out;
  for (int i = 0; i < n; ++i) {
    ClientUpdate u;
    u.delta = ModelParams::Init(arch, seed + static_cast<std::uint64_t>(i)).Flatten() * 1e-3;
    u.sample_count = 3600 + i;
    u.client_id = i;
    u.local_fairness = 0.01 * i;
    out.push_back(std::move(u));
  }
  return out;
}

void BM_Aggregate(benchmark::State& state) {
  const auto kind = static_cast<RuleKind>(state.range(0));
  const auto updates = Updates(10, 11);
  AggregationRule rule;
  rule.kind = kind;
  state.SetLabel(std::string(RuleName(kind)));
  for (auto _ : state) benchmark::DoNotOptimize(Aggregate(rule, updates));
}
BENCHMARK(BM_Aggregate)->DenseRange(0, 6);

}  // namespace
}  // namespace fairattack

BENCHMARK_MAIN();
