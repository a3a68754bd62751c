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

#include "fairattack/cli.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "fairattack/config.h"
#include "fairattack/errors.h"
#include "fairattack/records.h"
#include "fairattack/simulator.h"
#include "fairattack/verify.h"

namespace fairattack {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

void AddCommonOptions(CLI::App* cmd, CommonOptions* opts) {
  cmd->add_option("--config", opts->config_path, "Experiment config file")->required();
  cmd->add_option("--overrides", opts->overrides,
                  "Dotted-key overrides, e.g. attack.lambda=0 (repeatable)");
  cmd->add_option("--output-dir", opts->output_dir,
                  "Directory for runs.jsonl, cells.jsonl, rounds.csv and report.md");
  cmd->add_option("--seed", opts->seed, "Offset added to the data, init and train seeds");
}

ConfigFile LoadWithOptions(const CommonOptions& opts) {
  ConfigFile cfg = LoadConfigFile(opts.config_path, opts.overrides);
  if (opts.seed) {
    cfg.experiment.seeds.data += *opts.seed;
    cfg.experiment.seeds.init += *opts.seed;
    cfg.experiment.seeds.train += *opts.seed;
  }
  cfg.experiment.Validate();
  return cfg;
}

std::string Fixed(double v, int digits = 4) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                       std::chars_format::fixed, digits);
  return std::string(buf.data(), ptr);
}

std::string SummaryLine(const CellSummary& s) {
  return "acc " + Fixed(s.acc.mean) + " +/- " + Fixed(s.acc.stddev) + "  dp " +
         Fixed(s.dp.mean) + " +/- " + Fixed(s.dp.stddev) + "  eod " + Fixed(s.eod.mean) +
         " +/- " + Fixed(s.eod.stddev) + "  (" + std::to_string(s.runs) + " runs)";
}

void WriteOutputs(const std::string& dir, const ConfigFile& cfg,
                  const std::vector<RunResult>& runs, const std::vector<CellRecord>& cells,
                  std::ostream& out) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  const fs::path root(dir);
  WriteTextFile(root / "config.yaml", SerializeConfig(cfg));
  WriteTextFile(root / "runs.jsonl", RunRecordsToJsonLines(runs));
  WriteTextFile(root / "cells.jsonl", CellRecordsToJsonLines(cells));
  WriteTextFile(root / "report.md", RenderMarkdownTable(cells));
  if (!runs.empty()) EmitCsv(root / "rounds.csv", runs);
  out << "wrote outputs to " << root.string() << "\n";
}

int DoRun(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  const ConfigFile cfg = LoadWithOptions(opts);
  const ExperimentConfig& e = cfg.experiment;
  const PreparedData data = PrepareData(e);
  out << e.name << ": rule " << RuleName(e.rule.kind) << ", " << e.n_malicious
      << " malicious of " << e.n_clients << ", " << e.rounds << " rounds, " << e.repeats
      << " repeats\n";
  std::vector<RunResult> runs;
  for (int r = 0; r < e.repeats; ++r) {
    runs.push_back(Run(e, data, r));
    const FairnessReport& f = runs.back().final_report;
    out << "repeat " << r << ": acc " << Fixed(f.accuracy) << "  dp " << Fixed(f.dp)
        << "  eod " << Fixed(f.eod) << "\n";
    for (const RoundLog& log : runs.back().rounds) {
      for (const std::string& w : log.warnings) {
        err << "warning: repeat " << r << " round " << log.round << ": " << w << "\n";
      }
    }
  }
  const CellSummary summary = Summarize(runs);
  out << "mean: " << SummaryLine(summary) << "\n";
  WriteOutputs(opts.output_dir, cfg, runs,
               {MakeCellRecord(e.rule.kind, e.n_malicious, summary)}, out);
  return kExitOk;
}

int DoGrid(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  const ConfigFile cfg = LoadWithOptions(opts);
  if (!cfg.grid) throw ConfigError(opts.config_path + " has no grid section");
  const GridTable table =
      RunGrid(cfg.experiment, cfg.grid->rules, cfg.grid->malicious_counts,
              [&](const GridCell& cell) {
                err << "cell " << RuleName(cell.rule) << " / " << cell.n_malicious
                    << " malicious: "
                    << (cell.error ? "FAILED: " + *cell.error : SummaryLine(cell.summary))
                    << "\n";
              });
  std::vector<RunResult> runs;
  bool failed = false;
  for (const GridCell& cell : table.cells) {
    runs.insert(runs.end(), cell.runs.begin(), cell.runs.end());
    failed = failed || cell.error.has_value();
  }
  const std::vector<CellRecord> cells = MakeCellRecords(table);
  out << RenderMarkdownTable(cells);
  WriteOutputs(opts.output_dir, cfg, runs, cells, out);
  return failed ? kExitRuntimeError : kExitOk;
}

int DoVerify(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const VerifyCheck& c : RunVerification(seed)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitRuntimeError;
}

int DoReport(const std::string& input, std::ostream& out) {
  fs::path path(input);
  if (fs::is_directory(path)) path /= "cells.jsonl";
  const std::vector<CellRecord> cells = ReadCellRecords(path);
  if (cells.empty()) throw DataError(path.string() + " contains no cell records");
  out << RenderMarkdownTable(cells);
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated fairness-attack simulator", "fairattack"};
  app.require_subcommand(1, 1);

  CommonOptions run_opts, grid_opts;
  CLI::App* run = app.add_subcommand("run", "Run one experiment config (all repeats)");
  AddCommonOptions(run, &run_opts);
  CLI::App* grid = app.add_subcommand("grid", "Run the rule x malicious-count grid");
  AddCommonOptions(grid, &grid_opts);
  std::uint64_t verify_seed = 7;
  CLI::App* verify = app.add_subcommand("verify", "Run the built-in oracle checks");
  verify->add_option("--seed", verify_seed, "Seed for the random instances");
  std::string report_input;
  CLI::App* report = app.add_subcommand("report", "Render stored cell records as markdown");
  report->add_option("--input", report_input, "cells.jsonl or an output directory")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed()) return DoRun(run_opts, out, err);
    if (grid->parsed()) return DoGrid(grid_opts, out, err);
    if (verify->parsed()) return DoVerify(verify_seed, out);
    return DoReport(report_input, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace fairattack
