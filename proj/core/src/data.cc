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

#include "fairattack/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fairattack/random.h"

namespace fairattack {
namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas and doubled
// quotes; unquoted fields are whitespace-trimmed.
std::vector<std::string> SplitRecord(std::string_view line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : Trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw RowError(lineno, "unterminated quoted field");
  fields.push_back(was_quoted ? cur : Trim(cur));
  return fields;
}

bool ParseDouble(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::size_t ColumnIndex(const RawTable& table, const std::string& name) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw SchemaError("missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

}  // namespace

void DatasetSchema::Validate() const {
  if (label_column.empty()) throw SchemaError("label_column is empty");
  if (sensitive_column.empty()) throw SchemaError("sensitive_column is empty");
  if (label_column == sensitive_column) {
    throw SchemaError("label_column and sensitive_column must differ");
  }
  std::set<std::string> seen;
  for (const auto* cols : {&categorical_columns, &numeric_columns}) {
    for (const auto& c : *cols) {
      if (c == label_column) {
        throw SchemaError("label column '" + c + "' listed as a feature");
      }
      if (!seen.insert(c).second) {
        throw SchemaError("column '" + c + "' listed twice");
      }
    }
  }
  if (seen.empty()) throw SchemaError("schema has no feature columns");
}

void TabularDataset::CheckInvariants() const {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (features.rows() != n || sensitive.size() != labels.size()) {
    throw DataError("features, labels and sensitive disagree on row count");
  }
  if (group_count < 2) throw DataError("group_count must be >= 2");
  if (feature_names.size() != cols()) {
    throw DataError("feature_names size does not match feature columns");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("label outside {0,1}");
  }
  for (int a : sensitive) {
    if (a < 0 || a >= group_count) throw DataError("sensitive index out of range");
  }
  if (!features.allFinite()) throw DataError("non-finite feature value");
}

void Partition::Validate(std::size_t row_count) const {
  std::vector<char> used(row_count, 0);
  for (std::size_t c = 0; c < client_shards.size(); ++c) {
    if (client_shards[c].empty()) {
      throw DataError("client " + std::to_string(c) + " received an empty shard");
    }
    for (std::size_t i : client_shards[c]) {
      if (i >= row_count) throw DataError("shard index out of range");
      if (used[i]) throw DataError("row assigned to more than one shard");
      used[i] = 1;
    }
  }
}

RawTable ParseCsv(const std::string& text) {
  RawTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (Trim(line).empty()) continue;
    auto fields = SplitRecord(line, lineno);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw RowError(lineno, "expected " + std::to_string(table.header.size()) +
                                 " fields, got " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DataError("CSV input has no header row");
  return table;
}

RawTable ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str());
}

TabularDataset EncodeTable(const RawTable& table, const DatasetSchema& schema) {
  if (table.encoded) {
    throw DataError("table is already encoded; refusing to encode it again");
  }
  schema.Validate();

  const std::size_t label_idx = ColumnIndex(table, schema.label_column);
  const std::size_t sens_idx = ColumnIndex(table, schema.sensitive_column);
  std::unordered_set<std::string> numeric(schema.numeric_columns.begin(),
                                          schema.numeric_columns.end());
  std::unordered_set<std::string> categorical(schema.categorical_columns.begin(),
                                              schema.categorical_columns.end());
  for (const auto& c : schema.numeric_columns) ColumnIndex(table, c);
  for (const auto& c : schema.categorical_columns) ColumnIndex(table, c);

  // Feature columns in header order.
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (numeric.count(table.header[j]) || categorical.count(table.header[j])) {
      feature_cols.push_back(j);
    }
  }

  std::unordered_set<std::string> na(schema.na_values.begin(),
                                     schema.na_values.end());
  std::vector<std::size_t> used_cols = feature_cols;
  used_cols.push_back(label_idx);
  used_cols.push_back(sens_idx);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    for (std::size_t j : used_cols) {
      if (na.count(row[j])) {
        missing = true;
        break;
      }
    }
    if (!missing) keep.push_back(r);
  }
  if (keep.empty()) throw DataError("dataset is empty after dropping missing rows");

  auto line_of = [&](std::size_t r) {
    return r < table.line_numbers.size() ? table.line_numbers[r] : r + 2;
  };

  // Column blocks: numeric → one scaled column, categorical → one-hot block.
  struct Block {
    std::size_t source;
    bool is_numeric;
    std::vector<std::string> levels;  // categorical only
    double min = 0.0, max = 0.0;      // numeric only
  };
  std::vector<Block> blocks;
  std::vector<std::vector<double>> numeric_values(feature_cols.size());
  for (std::size_t b = 0; b < feature_cols.size(); ++b) {
    const std::size_t j = feature_cols[b];
    Block block{j, numeric.count(table.header[j]) > 0, {}, 0.0, 0.0};
    if (block.is_numeric) {
      auto& vals = numeric_values[b];
      vals.reserve(keep.size());
      for (std::size_t r : keep) {
        double v;
        if (!ParseDouble(table.rows[r][j], v)) {
          throw RowError(line_of(r), "column '" + table.header[j] +
                                         "': cannot parse '" +
                                         table.rows[r][j] + "' as a number");
        }
        vals.push_back(v);
      }
      auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
      block.min = *mn;
      block.max = *mx;
    } else {
      std::set<std::string> levels;
      for (std::size_t r : keep) levels.insert(table.rows[r][j]);
      block.levels.assign(levels.begin(), levels.end());
    }
    blocks.push_back(std::move(block));
  }

  TabularDataset ds;
  for (const auto& block : blocks) {
    if (block.is_numeric) {
      ds.feature_names.push_back(table.header[block.source]);
    } else {
      for (const auto& level : block.levels) {
        ds.feature_names.push_back(table.header[block.source] + "=" + level);
      }
    }
  }

  const auto n = static_cast<Eigen::Index>(keep.size());
  ds.features = RowMatrix::Zero(n, static_cast<Eigen::Index>(ds.feature_names.size()));
  Eigen::Index col = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (block.is_numeric) {
      const double range = block.max - block.min;
      for (Eigen::Index i = 0; i < n; ++i) {
        ds.features(i, col) =
            range > 0.0 ? (numeric_values[b][i] - block.min) / range : 0.0;
      }
      ++col;
    } else {
      std::unordered_map<std::string, Eigen::Index> offset;
      for (std::size_t l = 0; l < block.levels.size(); ++l) {
        offset[block.levels[l]] = static_cast<Eigen::Index>(l);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        ds.features(i, col + offset.at(table.rows[keep[i]][block.source])) = 1.0;
      }
      col += static_cast<Eigen::Index>(block.levels.size());
    }
  }

  ds.labels.reserve(keep.size());
  for (std::size_t r : keep) {
    ds.labels.push_back(table.rows[r][label_idx] == schema.label_positive_value);
  }

  ds.sensitive.reserve(keep.size());
  if (schema.sensitive_threshold) {
    const double t = *schema.sensitive_threshold;
    std::ostringstream lo, hi;
    lo << "<" << t;
    hi << ">=" << t;
    ds.group_names = {lo.str(), hi.str()};
    for (std::size_t r : keep) {
      double v;
      if (!ParseDouble(table.rows[r][sens_idx], v)) {
        throw RowError(line_of(r), "sensitive column '" + schema.sensitive_column +
                                       "': cannot parse '" +
                                       table.rows[r][sens_idx] + "'");
      }
      ds.sensitive.push_back(v >= t ? 1 : 0);
    }
  } else {
    std::set<std::string> values;
    for (std::size_t r : keep) values.insert(table.rows[r][sens_idx]);
    ds.group_names.assign(values.begin(), values.end());
    std::map<std::string, int> index;
    for (std::size_t g = 0; g < ds.group_names.size(); ++g) {
      index[ds.group_names[g]] = static_cast<int>(g);
    }
    for (std::size_t r : keep) ds.sensitive.push_back(index.at(table.rows[r][sens_idx]));
  }
  ds.group_count = static_cast<int>(ds.group_names.size());
  if (ds.group_count < 2) {
    throw DataError("sensitive column '" + schema.sensitive_column +
                    "' has fewer than two groups");
  }
  ds.CheckInvariants();
  return ds;
}

TabularDataset LoadCsv(const std::filesystem::path& path,
                       const DatasetSchema& schema) {
  return EncodeTable(ReadCsv(path), schema);
}

RawTable ExportEncoded(const TabularDataset& ds) {
  RawTable table;
  table.encoded = true;
  table.header = ds.feature_names;
  table.header.push_back("label");
  table.header.push_back("group");
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      std::ostringstream cell;
      cell.precision(17);
      cell << ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row.push_back(cell.str());
    }
    row.push_back(std::to_string(ds.labels[i]));
    row.push_back(std::to_string(ds.sensitive[i]));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(i + 2);
  }
  return table;
}

TabularDataset Subset(const TabularDataset& ds,
                      std::span<const std::size_t> indices) {
  TabularDataset out;
  out.feature_names = ds.feature_names;
  out.group_names = ds.group_names;
  out.group_count = ds.group_count;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), ds.features.cols());
  out.labels.reserve(indices.size());
  out.sensitive.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= ds.rows()) throw InvalidArgument("Subset: row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) =
        ds.features.row(static_cast<Eigen::Index>(src));
    out.labels.push_back(ds.labels[src]);
    out.sensitive.push_back(ds.sensitive[src]);
  }
  return out;
}

TrainTestSplit StratifiedSplit(const TabularDataset& ds, double test_fraction,
                               std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must be in [0, 1)");
  }
  Rng rng(seed);
  TrainTestSplit split;
  for (int y : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      if (ds.labels[i] == y) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(idx.size())));
    split.test.insert(split.test.end(), idx.begin(), idx.begin() + n_test);
    split.train.insert(split.train.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Partition PartitionRandom(const TabularDataset& ds, int n_clients,
                          std::uint64_t seed) {
  if (n_clients < 1) throw InvalidArgument("n_clients must be >= 1");
  const std::size_t n = ds.rows();
  const auto k = static_cast<std::size_t>(n_clients);
  if (k > n) {
    throw InvalidArgument("n_clients (" + std::to_string(k) +
                          ") exceeds dataset rows (" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Partition p;
  p.client_shards.resize(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < k; ++c) {
    // The trailing `extra` shards take one more row.
    const std::size_t size = base + (c >= k - extra ? 1 : 0);
    p.client_shards[c].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                              perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(p.client_shards[c].begin(), p.client_shards[c].end());
    pos += size;
  }
  return p;
}

Partition PartitionByAttribute(const TabularDataset& ds, int n_clients,
                               double skew, std::uint64_t seed) {
  if (!(skew >= 0.0 && skew <= 1.0)) throw InvalidArgument("skew must be in [0, 1]");
  const int k = ds.group_count;
  if (n_clients < k) {
    throw InvalidArgument("n_clients must be >= group_count for attribute partition");
  }
  std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    by_group[static_cast<std::size_t>(ds.sensitive[i])].push_back(i);
  }
  for (int g = 0; g < k; ++g) {
    if (by_group[static_cast<std::size_t>(g)].empty()) {
      throw DataError("group '" + ds.group_names[static_cast<std::size_t>(g)] +
                      "' has no rows");
    }
  }

  Rng rng(seed);
  Partition p;
  p.client_shards.resize(static_cast<std::size_t>(n_clients));
  std::vector<std::size_t> pool;
  for (int g = 0; g < k; ++g) {
    auto& rows = by_group[static_cast<std::size_t>(g)];
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_home = static_cast<std::size_t>(
        std::llround(skew * static_cast<double>(rows.size())));
    std::vector<std::size_t> homes;
    for (int c = g; c < n_clients; c += k) homes.push_back(static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < n_home; ++i) {
      p.client_shards[homes[i % homes.size()]].push_back(rows[i]);
    }
    pool.insert(pool.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_home),
                rows.end());
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    p.client_shards[i % static_cast<std::size_t>(n_clients)].push_back(pool[i]);
  }
  for (auto& shard : p.client_shards) std::sort(shard.begin(), shard.end());
  p.Validate(ds.rows());
  return p;
}

double PositiveRate(const TabularDataset& ds) {
  if (ds.rows() == 0) return 0.0;
  const auto pos = std::count(ds.labels.begin(), ds.labels.end(), 1);
  return static_cast<double>(pos) / static_cast<double>(ds.rows());
}

}  // namespace fairattack
