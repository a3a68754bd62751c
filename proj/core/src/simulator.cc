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

#include "fairattack/simulator.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <utility>

#include "fairattack/errors.h"
#include "fairattack/random.h"

namespace fairattack {
namespace {

constexpr std::uint64_t kDataStream = 0xda7a;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kTrainStream = 0x7a14;

FairnessReport EvaluateModel(const ModelParams& params, const TabularDataset& test) {
  const Eigen::VectorXd probs = Forward(params, test.features);
  return Evaluate(std::span<const double>(probs.data(), probs.size()), test.labels,
                  test.sensitive, test.group_count);
}

// Runs `task(i)` for i in [0, n) on up to `threads` workers. The first failure
// in index order is rethrown after all workers finish.
template <typename Task>
void ParallelFor(int n, int threads, Task&& task) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto guarded = [&](int i) {
    try {
      task(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  const int workers = std::min(threads, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) guarded(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string CurrentErrorMessage() {
  try {
    throw;
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string_view PartitionKindName(PartitionKind kind) {
  return kind == PartitionKind::kAttribute ? "attribute" : "random";
}

PartitionKind ParsePartitionKind(std::string_view name) {
  if (name == "random") return PartitionKind::kRandom;
  if (name == "attribute") return PartitionKind::kAttribute;
  throw InvalidArgument("unknown partition kind '" + std::string(name) + "'");
}

std::string_view AttackKindName(AttackKind kind) {
  return kind == AttackKind::kScaling ? "scaling" : "fairness";
}

AttackKind ParseAttackKind(std::string_view name) {
  if (name == "fairness") return AttackKind::kFairness;
  if (name == "scaling") return AttackKind::kScaling;
  throw InvalidArgument("unknown attack kind '" + std::string(name) + "'");
}

void ExperimentConfig::Validate() const {
  Require(!dataset_path.empty(), "dataset.path must be set");
  try {
    schema.Validate();
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("dataset schema: ") + e.what());
  }
  Require(test_fraction > 0.0 && test_fraction < 1.0,
          "dataset.test_fraction must lie in (0, 1)");
  Require(n_clients >= 1, "federation.n_clients must be >= 1");
  Require(n_malicious >= 0 && n_malicious < n_clients,
          "federation.n_malicious must satisfy 0 <= n_malicious < n_clients");
  Require(rounds >= 0, "federation.rounds must be >= 0");
  Require(repeats >= 1, "federation.repeats must be >= 1");
  Require(threads >= 1, "federation.threads must be >= 1");
  Require(hidden1 >= 1 && hidden2 >= 1, "model hidden sizes must be >= 1");
  Require(std::isfinite(scale_factor), "attack.scale_factor must be finite");
  Require(skew >= 0.0 && skew <= 1.0, "partition.skew must lie in [0, 1]");
  try {
    train.Validate();
    attack.Validate();
    rule.Validate(n_clients);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

bool SameOutcome(const RunResult& a, const RunResult& b) {
  // The thread count changes scheduling only, never the numbers.
  ExperimentConfig a_cfg = a.config;
  a_cfg.threads = b.config.threads;
  if (!(a_cfg == b.config) || a.repeat != b.repeat || !(a.seeds == b.seeds) ||
      !(a.initial == b.initial) || !(a.final_report == b.final_report) ||
      !(a.final_model == b.final_model) || a.rounds.size() != b.rounds.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    const RoundLog& x = a.rounds[i];
    const RoundLog& y = b.rounds[i];
    if (x.round != y.round || !(x.global == y.global) ||
        x.client_local_dp != y.client_local_dp || x.selected_ids != y.selected_ids ||
        x.warnings != y.warnings) {
      return false;
    }
  }
  return true;
}

PreparedData PrepareData(const ExperimentConfig& cfg) {
  PreparedData out;
  out.full = LoadCsv(cfg.dataset_path, cfg.schema);
  out.split = StratifiedSplit(out.full, cfg.test_fraction,
                              DeriveSeed(cfg.seeds.data, {kDataStream}));
  out.train = Subset(out.full, out.split.train);
  out.test = Subset(out.full, out.split.test);
  return out;
}

Seeds RepeatSeeds(const Seeds& base, int repeat) {
  const auto r = static_cast<std::uint64_t>(repeat);
  return Seeds{DeriveSeed(base.data, {kDataStream, r}),
               DeriveSeed(base.init, {kInitStream, r}),
               DeriveSeed(base.train, {kTrainStream, r})};
}

Partition MakePartition(const ExperimentConfig& cfg, const PreparedData& data,
                        int repeat) {
  const Seeds seeds = RepeatSeeds(cfg.seeds, repeat);
  Partition p = cfg.partition == PartitionKind::kAttribute
                    ? PartitionByAttribute(data.train, cfg.n_clients, cfg.skew, seeds.data)
                    : PartitionRandom(data.train, cfg.n_clients, seeds.data);
  p.Validate(data.train.rows());
  return p;
}

RunResult Run(const ExperimentConfig& cfg, const PreparedData& data, int repeat) {
  cfg.Validate();
  RunResult result;
  result.config = cfg;
  result.repeat = repeat;
  result.seeds = RepeatSeeds(cfg.seeds, repeat);

  const Partition partition = MakePartition(cfg, data, repeat);
  std::vector<TabularDataset> shards;
  shards.reserve(partition.client_shards.size());
  for (const auto& idx : partition.client_shards) shards.push_back(Subset(data.train, idx));

  // Union of the shards the adversary controls.
  std::optional<TabularDataset> colluder_pool;
  if (cfg.collude && cfg.n_malicious > 0 && cfg.attack_kind == AttackKind::kFairness) {
    std::vector<std::size_t> pooled;
    for (int c = 0; c < cfg.n_malicious; ++c) {
      const auto& idx = partition.client_shards[static_cast<std::size_t>(c)];
      pooled.insert(pooled.end(), idx.begin(), idx.end());
    }
    std::sort(pooled.begin(), pooled.end());
    colluder_pool = Subset(data.train, pooled);
  }

  const Architecture arch{static_cast<int>(data.train.cols()), cfg.hidden1, cfg.hidden2};
  ModelParams global = ModelParams::Init(arch, result.seeds.init);
  result.initial = EvaluateModel(global, data.test);
  result.final_report = result.initial;

  const bool fairtrade = cfg.rule.kind == RuleKind::kFairTrade;
  for (int round = 1; round <= cfg.rounds; ++round) {
    try {
      const auto start = std::chrono::steady_clock::now();
      std::vector<LocalTrainResult> local(static_cast<std::size_t>(cfg.n_clients));
      ParallelFor(cfg.n_clients, cfg.threads, [&](int c) {
        const std::uint64_t seed =
            DeriveSeed(result.seeds.train,
                       {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(c)});
        const TabularDataset& shard = shards[static_cast<std::size_t>(c)];
        LocalTrainResult& out = local[static_cast<std::size_t>(c)];
        if (c < cfg.n_malicious) {
          out = cfg.attack_kind == AttackKind::kScaling
                    ? ScalingBaseline(global, shard, cfg.scale_factor, cfg.train, seed)
                    : MaliciousLocalTrain(global, shard, cfg.attack, cfg.train, seed,
                                          colluder_pool ? &*colluder_pool : nullptr);
        } else if (fairtrade) {
          out = FairRegularizedLocalTrain(global, shard, cfg.rule.fairtrade_lambda,
                                          cfg.train, seed);
        } else {
          out = HonestLocalTrain(global, shard, cfg.train, seed);
        }
        out.update.client_id = c;
      });

      RoundLog log;
      log.round = round;
      std::vector<ClientUpdate> updates;
      updates.reserve(local.size());
      for (LocalTrainResult& r : local) {
        log.client_local_dp.push_back(r.local_report.dp);
        for (const std::string& w : r.warnings) {
          log.warnings.push_back("client " + std::to_string(r.update.client_id) + ": " + w);
        }
        // A single-group shard has no measurable disparity of its own.
        r.update.local_fairness = r.local_report.dp.value_or(0.0);
        updates.push_back(std::move(r.update));
      }

      AggregateResult agg = Aggregate(cfg.rule, updates);
      global.AssignFlat(global.Flatten() + agg.delta);
      if (!global.AllFinite()) throw DivergenceError("global model is not finite");
      log.selected_ids = std::move(agg.selected_ids);
      log.global = EvaluateModel(global, data.test);
      log.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.final_report = log.global;
      result.rounds.push_back(std::move(log));
    } catch (...) {
      throw std::runtime_error("round " + std::to_string(round) + ": " +
                               CurrentErrorMessage());
    }
  }
  result.final_model = std::move(global);
  return result;
}

RunResult Run(const ExperimentConfig& cfg, int repeat) {
  cfg.Validate();
  return Run(cfg, PrepareData(cfg), repeat);
}

std::vector<RunResult> RunRepeats(const ExperimentConfig& cfg, const PreparedData& data) {
  cfg.Validate();
  std::vector<RunResult> runs;
  runs.reserve(static_cast<std::size_t>(cfg.repeats));
  for (int r = 0; r < cfg.repeats; ++r) runs.push_back(Run(cfg, data, r));
  return runs;
}

namespace {

MetricSummary SummarizeValues(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

CellSummary Summarize(const std::vector<RunResult>& runs) {
  std::vector<double> acc, dp, eod;
  for (const RunResult& r : runs) {
    acc.push_back(r.final_report.accuracy);
    dp.push_back(r.final_report.dp);
    eod.push_back(r.final_report.eod);
  }
  CellSummary s;
  s.acc = SummarizeValues(acc);
  s.dp = SummarizeValues(dp);
  s.eod = SummarizeValues(eod);
  s.runs = static_cast<int>(runs.size());
  return s;
}

const GridCell& GridTable::At(RuleKind rule, int n_malicious) const {
  for (const GridCell& c : cells) {
    if (c.rule == rule && c.n_malicious == n_malicious) return c;
  }
  throw InvalidArgument("grid has no cell for rule '" + std::string(RuleName(rule)) +
                        "' with " + std::to_string(n_malicious) + " malicious clients");
}

GridTable RunGrid(const ExperimentConfig& base, const std::vector<RuleKind>& rules,
                  const std::vector<int>& malicious_counts,
                  const std::function<void(const GridCell&)>& on_cell) {
  if (rules.empty() || malicious_counts.empty()) {
    throw ConfigError("grid needs at least one rule and one malicious count");
  }
  // Fail fast on invalid combinations before any training happens.
  for (RuleKind rule : rules) {
    for (int m : malicious_counts) {
      ExperimentConfig cfg = base;
      cfg.rule.kind = rule;
      cfg.n_malicious = m;
      cfg.Validate();
    }
  }
  const PreparedData data = PrepareData(base);
  GridTable table;
  table.rules = rules;
  table.malicious_counts = malicious_counts;
  for (RuleKind rule : rules) {
    for (int m : malicious_counts) {
      GridCell cell;
      cell.rule = rule;
      cell.n_malicious = m;
      ExperimentConfig cfg = base;
      cfg.rule.kind = rule;
      cfg.n_malicious = m;
      try {
        cell.runs = RunRepeats(cfg, data);
        cell.summary = Summarize(cell.runs);
      } catch (...) {
        cell.runs.clear();
        cell.error = CurrentErrorMessage();
      }
      if (on_cell) on_cell(cell);
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::optional<double> RelativeIncrease(double no_attack, double attacked) {
  if (attacked == 0.0) return std::nullopt;
  return 100.0 * (attacked - no_attack) / attacked;
}

AttackImpact ComputeAttackImpact(const FairnessReport& no_attack,
                                 const FairnessReport& attacked) {
  return AttackImpact{RelativeIncrease(no_attack.dp, attacked.dp),
                      RelativeIncrease(no_attack.eod, attacked.eod)};
}

}  // namespace fairattack
