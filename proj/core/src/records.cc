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

#include "fairattack/records.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fairattack/config.h"
#include "fairattack/errors.h"

namespace fairattack {
namespace {

using nlohmann::json;

std::string ShortestDouble(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

json ConfigValueToJson(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::kBool: return v.bool_value;
    case ConfigValue::Kind::kInt: return v.int_value;
    case ConfigValue::Kind::kFloat: return v.float_value;
    case ConfigValue::Kind::kString: return v.string_value;
    case ConfigValue::Kind::kArray: {
      json arr = json::array();
      for (const ConfigValue& item : v.items) arr.push_back(ConfigValueToJson(item));
      return arr;
    }
  }
  return nullptr;
}

json ReportToJson(const FairnessReport& r) {
  return json{{"acc", r.accuracy}, {"dp", r.dp}, {"eod", r.eod}};
}

json SummaryToJson(const MetricSummary& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}};
}

MetricSummary SummaryFromJson(const json& j) {
  return MetricSummary{j.at("mean").get<double>(), j.at("std").get<double>()};
}

json RunToJson(const RunResult& run) {
  json config = json::object();
  for (const auto& [key, value] : ConfigToTree(ConfigFile{run.config, std::nullopt})) {
    config[key] = ConfigValueToJson(value);
  }
  json rounds = json::array();
  for (const RoundLog& log : run.rounds) {
    json local_dp = json::array();
    for (const auto& dp : log.client_local_dp) {
      local_dp.push_back(dp ? json(*dp) : json(nullptr));
    }
    rounds.push_back(json{{"round", log.round},
                          {"global", ReportToJson(log.global)},
                          {"client_local_dp", local_dp},
                          {"selected_ids", log.selected_ids},
                          {"warnings", log.warnings},
                          {"wall_time_s", log.wall_time_s}});
  }
  return json{{"type", "run"},
              {"scheme", RuleName(run.config.rule.kind)},
              {"n_malicious", run.config.n_malicious},
              {"repeat", run.repeat},
              {"seeds",
               {{"data", run.seeds.data}, {"init", run.seeds.init}, {"train", run.seeds.train}}},
              {"config", config},
              {"initial", ReportToJson(run.initial)},
              {"final", ReportToJson(run.final_report)},
              {"rounds", rounds}};
}

}  // namespace

bool CellRecord::operator==(const CellRecord& o) const {
  auto same = [](const MetricSummary& a, const MetricSummary& b) {
    return a.mean == b.mean && a.stddev == b.stddev;
  };
  return scheme == o.scheme && n_malicious == o.n_malicious && runs == o.runs &&
         same(acc, o.acc) && same(dp, o.dp) && same(eod, o.eod) && error == o.error;
}

CellRecord MakeCellRecord(RuleKind rule, int n_malicious, const CellSummary& summary) {
  CellRecord c;
  c.scheme = std::string(RuleName(rule));
  c.n_malicious = n_malicious;
  c.runs = summary.runs;
  c.acc = summary.acc;
  c.dp = summary.dp;
  c.eod = summary.eod;
  return c;
}

std::vector<CellRecord> MakeCellRecords(const GridTable& grid) {
  std::vector<CellRecord> out;
  for (const GridCell& cell : grid.cells) {
    CellRecord c = MakeCellRecord(cell.rule, cell.n_malicious, cell.summary);
    c.error = cell.error;
    out.push_back(std::move(c));
  }
  return out;
}

std::string RunRecordsToJsonLines(const std::vector<RunResult>& runs) {
  std::string out;
  for (const RunResult& r : runs) {
    out += RunToJson(r).dump();
    out += '\n';
  }
  return out;
}

std::string CellRecordsToJsonLines(const std::vector<CellRecord>& cells) {
  std::string out;
  for (const CellRecord& c : cells) {
    json j{{"type", "cell"},
           {"scheme", c.scheme},
           {"n_malicious", c.n_malicious},
           {"runs", c.runs},
           {"acc", SummaryToJson(c.acc)},
           {"dp", SummaryToJson(c.dp)},
           {"eod", SummaryToJson(c.eod)}};
    if (c.error) j["error"] = *c.error;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<CellRecord> ParseCellRecords(const std::string& json_lines) {
  std::vector<CellRecord> out;
  std::istringstream in(json_lines);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (j.value("type", "") != "cell") continue;  // run records are skipped
      CellRecord c;
      c.scheme = j.at("scheme").get<std::string>();
      c.n_malicious = j.at("n_malicious").get<int>();
      c.runs = j.at("runs").get<int>();
      c.acc = SummaryFromJson(j.at("acc"));
      c.dp = SummaryFromJson(j.at("dp"));
      c.eod = SummaryFromJson(j.at("eod"));
      if (j.contains("error")) c.error = j.at("error").get<std::string>();
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw RowError(line_no, std::string("malformed record: ") + e.what());
    }
  }
  return out;
}

std::vector<CellRecord> ReadCellRecords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open record file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCellRecords(buf.str());
}

std::string RoundsCsv(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw InvalidArgument("no results to emit");
  std::string out = "scheme,n_malicious,repeat,round,acc,dp,eod\n";
  for (const RunResult& r : runs) {
    const std::string prefix = std::string(RuleName(r.config.rule.kind)) + "," +
                               std::to_string(r.config.n_malicious) + "," +
                               std::to_string(r.repeat) + ",";
    for (const RoundLog& log : r.rounds) {
      out += prefix + std::to_string(log.round) + "," + ShortestDouble(log.global.accuracy) +
             "," + ShortestDouble(log.global.dp) + "," + ShortestDouble(log.global.eod) + "\n";
    }
  }
  return out;
}

void EmitCsv(const std::filesystem::path& path, const std::vector<RunResult>& runs) {
  WriteTextFile(path, RoundsCsv(runs));
}

std::string AttackLevelLabel(int n_malicious) {
  switch (n_malicious) {
    case 0: return "No attack";
    case 1: return "One malicious client";
    case 2: return "Two malicious clients";
    default: return std::to_string(n_malicious) + " malicious clients";
  }
}

std::string RenderMarkdownTable(const std::vector<CellRecord>& cells) {
  std::vector<std::string> schemes;
  std::vector<int> levels;
  std::map<std::pair<std::string, int>, const CellRecord*> lookup;
  for (const CellRecord& c : cells) {
    if (std::find(schemes.begin(), schemes.end(), c.scheme) == schemes.end()) {
      schemes.push_back(c.scheme);
    }
    if (std::find(levels.begin(), levels.end(), c.n_malicious) == levels.end()) {
      levels.push_back(c.n_malicious);
    }
    lookup[{c.scheme, c.n_malicious}] = &c;
  }
  std::sort(levels.begin(), levels.end());

  auto fixed3 = [](double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 3);
    return std::string(buf.data(), ptr);
  };

  std::string out = "| Scheme |";
  std::string rule = "|---|";
  for (int level : levels) {
    const std::string label = AttackLevelLabel(level);
    for (const char* metric : {"Acc", "DP", "EOD"}) {
      out += " " + label + " " + metric + " |";
      rule += "---:|";
    }
  }
  out += "\n" + rule + "\n";
  for (const std::string& scheme : schemes) {
    out += "| " + scheme + " |";
    for (int level : levels) {
      const auto it = lookup.find({scheme, level});
      if (it == lookup.end()) {
        out += " n/a | n/a | n/a |";
      } else if (it->second->error) {
        out += " error | error | error |";
      } else {
        const CellRecord& c = *it->second;
        out += " " + fixed3(c.acc.mean) + " | " + fixed3(c.dp.mean) + " | " +
               fixed3(c.eod.mean) + " |";
      }
    }
    out += "\n";
  }
  return out;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace fairattack
