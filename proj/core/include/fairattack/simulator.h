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

#ifndef FAIRATTACK_SIMULATOR_H_
#define FAIRATTACK_SIMULATOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairattack/aggregation.h"
#include "fairattack/attack.h"
#include "fairattack/data.h"
#include "fairattack/fairness.h"
#include "fairattack/model.h"

namespace fairattack {

enum class PartitionKind { kRandom, kAttribute };
std::string_view PartitionKindName(PartitionKind kind);
PartitionKind ParsePartitionKind(std::string_view name);

// What the malicious clients run.
enum class AttackKind { kFairness, kScaling };
std::string_view AttackKindName(AttackKind kind);
AttackKind ParseAttackKind(std::string_view name);

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t init = 2;
  std::uint64_t train = 3;
  bool operator==(const Seeds&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";

  // Dataset.
  std::string dataset_path;
  DatasetSchema schema;
  double test_fraction = 0.2;

  // Federation.
  int n_clients = 10;
  int n_malicious = 0;
  int rounds = 50;
  int repeats = 10;
  // Worker threads for client training within a round. Results do not
  // depend on this value.
  int threads = 1;

  // Model and local training.
  int hidden1 = 64;
  int hidden2 = 32;
  TrainOptions train;

  // Malicious clients.
  AttackKind attack_kind = AttackKind::kFairness;
  AttackConfig attack;
  double scale_factor = 100.0;
  // Malicious clients pool their shards to fill groups missing from a batch.
  bool collude = true;

  AggregationRule rule;

  PartitionKind partition = PartitionKind::kRandom;
  double skew = 1.0;

  Seeds seeds;

  // Throws ConfigError describing the first invalid field.
  void Validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct RoundLog {
  int round = 0;  // 1-based
  FairnessReport global;
  std::vector<std::optional<double>> client_local_dp;  // by client id
  std::vector<int> selected_ids;
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;
};

struct RunResult {
  ExperimentConfig config;
  int repeat = 0;
  // Seeds actually used for this repeat (derived from config.seeds).
  Seeds seeds;
  FairnessReport initial;
  FairnessReport final_report;
  std::vector<RoundLog> rounds;
  ModelParams final_model;
};

// Everything except wall-clock times and the worker thread count.
bool SameOutcome(const RunResult& a, const RunResult& b);

// Encoded dataset with its train/test split, shared across repeats and grid
// cells built from the same dataset settings.
struct PreparedData {
  TabularDataset full;
  TabularDataset train;
  TabularDataset test;
  TrainTestSplit split;
};

PreparedData PrepareData(const ExperimentConfig& cfg);

// Seeds for one repeat; repeat 0 uses seeds derived from the base seeds too,
// so that every repeat is an independent stream.
Seeds RepeatSeeds(const Seeds& base, int repeat);

// Client row indices (into `data.train`) for one repeat.
Partition MakePartition(const ExperimentConfig& cfg, const PreparedData& data,
                        int repeat);

// One federated run. Malicious clients are ids 0 .. n_malicious-1 in every
// round. Errors are rethrown with the round number prepended.
RunResult Run(const ExperimentConfig& cfg, const PreparedData& data, int repeat = 0);
RunResult Run(const ExperimentConfig& cfg, int repeat = 0);

// cfg.repeats runs.
std::vector<RunResult> RunRepeats(const ExperimentConfig& cfg, const PreparedData& data);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct CellSummary {
  MetricSummary acc, dp, eod;
  int runs = 0;
};

CellSummary Summarize(const std::vector<RunResult>& runs);

struct GridCell {
  RuleKind rule = RuleKind::kFedAvg;
  int n_malicious = 0;
  std::vector<RunResult> runs;
  CellSummary summary;
  // Set when the cell failed; other cells still run.
  std::optional<std::string> error;
};

struct GridTable {
  std::vector<RuleKind> rules;
  std::vector<int> malicious_counts;
  std::vector<GridCell> cells;  // rule-major

  const GridCell& At(RuleKind rule, int n_malicious) const;
};

// Runs every (rule, malicious count) cell with base.repeats repeats.
// `on_cell`, when given, is called after each cell finishes.
GridTable RunGrid(const ExperimentConfig& base, const std::vector<RuleKind>& rules,
                  const std::vector<int>& malicious_counts,
                  const std::function<void(const GridCell&)>& on_cell = {});

struct AttackImpact {
  std::optional<double> dp_percent;
  std::optional<double> eod_percent;
};

// 100 * (attacked - baseline) / attacked for DP and EOD; absent when the
// attacked value is zero.
AttackImpact ComputeAttackImpact(const FairnessReport& no_attack,
                                 const FairnessReport& attacked);
std::optional<double> RelativeIncrease(double no_attack, double attacked);

}  // namespace fairattack

#endif  // FAIRATTACK_SIMULATOR_H_
