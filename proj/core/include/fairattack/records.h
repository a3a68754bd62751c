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

// Persistent outputs of runs and grids:
//
//  * run records: one JSON object per line, one line per (cell, repeat),
//    holding the config echo, seeds and every round's metrics;
//  * cell records: one JSON object per line with the mean and standard
//    deviation over repeats of one (scheme, n_malicious) cell;
//  * the per-round CSV `scheme,n_malicious,repeat,round,acc,dp,eod`;
//  * a markdown table rendered from cell records.

#ifndef FAIRATTACK_RECORDS_H_
#define FAIRATTACK_RECORDS_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairattack/simulator.h"

namespace fairattack {

// Stored summary of one grid cell.
struct CellRecord {
  std::string scheme;
  int n_malicious = 0;
  int runs = 0;
  MetricSummary acc, dp, eod;
  std::optional<std::string> error;
  bool operator==(const CellRecord&) const;
};

CellRecord MakeCellRecord(RuleKind rule, int n_malicious, const CellSummary& summary);
std::vector<CellRecord> MakeCellRecords(const GridTable& grid);

// One JSON line per run, in the given order.
std::string RunRecordsToJsonLines(const std::vector<RunResult>& runs);
std::string CellRecordsToJsonLines(const std::vector<CellRecord>& cells);

// Throws DataError on malformed lines.
std::vector<CellRecord> ParseCellRecords(const std::string& json_lines);
std::vector<CellRecord> ReadCellRecords(const std::filesystem::path& path);

// Per-round CSV text. Rows follow the order of `runs`, then round. Numbers are
// printed in shortest round-trip form. Throws InvalidArgument when `runs` is
// empty.
std::string RoundsCsv(const std::vector<RunResult>& runs);

// Writes RoundsCsv(runs) to `path`. Nothing is written when `runs` is empty
// (InvalidArgument) or the path cannot be opened (std::runtime_error).
void EmitCsv(const std::filesystem::path& path, const std::vector<RunResult>& runs);

// Markdown table: one row per scheme (first-appearance order), one Acc/DP/EOD
// column triple per malicious count (ascending). Cells without a record read
// "n/a", failed cells "error".
std::string RenderMarkdownTable(const std::vector<CellRecord>& cells);

// Column-group heading for a malicious count: "No attack",
// "One malicious client", "Two malicious clients", "N malicious clients".
std::string AttackLevelLabel(int n_malicious);

// Writes `text` to `path`, replacing any existing file.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace fairattack

#endif  // FAIRATTACK_RECORDS_H_
