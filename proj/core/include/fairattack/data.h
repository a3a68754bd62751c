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

#ifndef FAIRATTACK_DATA_H_
#define FAIRATTACK_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairattack/errors.h"

namespace fairattack {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Describes how the columns of a raw CSV map onto features, label and
// sensitive attribute. The sensitive column may also be listed as a feature
// column; the label column may not.
struct DatasetSchema {
  std::string label_column;
  std::string label_positive_value;
  std::string sensitive_column;
  // When set, the sensitive column is numeric and binarized as
  // group = (value >= threshold). Otherwise its distinct values are mapped to
  // contiguous group indices in lexicographic order.
  std::optional<double> sensitive_threshold;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> numeric_columns;
  // Cells equal to one of these tokens mark a row as missing; such rows are
  // dropped.
  std::vector<std::string> na_values;

  // Throws SchemaError on overlapping or empty column roles.
  void Validate() const;
  bool operator==(const DatasetSchema&) const = default;
};

// Raw string cells as read from a CSV file.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based source line of every row, for error messages.
  std::vector<std::size_t> line_numbers;
  // Set on tables produced by ExportEncoded(); EncodeTable() rejects them.
  bool encoded = false;
};

// Encoded, immutable-after-construction tabular data.
struct TabularDataset {
  RowMatrix features;
  std::vector<int> labels;
  std::vector<int> sensitive;
  std::vector<std::string> feature_names;
  std::vector<std::string> group_names;
  int group_count = 0;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return static_cast<std::size_t>(features.cols()); }

  // Throws DataError when an invariant is broken.
  void CheckInvariants() const;
};

// One row-index list per client.
struct Partition {
  std::vector<std::vector<std::size_t>> client_shards;

  // Shards must be non-empty, disjoint and index rows < `row_count`.
  void Validate(std::size_t row_count) const;
};

struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

RawTable ReadCsv(const std::filesystem::path& path);
RawTable ParseCsv(const std::string& text);

// One-hot encodes categorical columns, min-max scales numeric columns to
// [0, 1] (constant columns map to 0), binarizes the label and maps the
// sensitive column to group indices.
TabularDataset EncodeTable(const RawTable& table, const DatasetSchema& schema);

// ReadCsv followed by EncodeTable.
TabularDataset LoadCsv(const std::filesystem::path& path,
                       const DatasetSchema& schema);

// Dumps an encoded dataset as a table. The result carries `encoded = true` so
// that it cannot be fed through EncodeTable a second time.
RawTable ExportEncoded(const TabularDataset& ds);

TabularDataset Subset(const TabularDataset& ds,
                      std::span<const std::size_t> indices);

// Label-stratified split; the test side receives round(test_fraction * n_y)
// rows of each label y.
TrainTestSplit StratifiedSplit(const TabularDataset& ds, double test_fraction,
                               std::uint64_t seed);

// Shuffles rows and deals them into `n_clients` shards whose sizes differ by
// at most one.
Partition PartitionRandom(const TabularDataset& ds, int n_clients,
                          std::uint64_t seed);

// Client c has home group c mod k. A `skew` fraction of every group's rows is
// dealt round-robin among the clients sharing that home group; the remaining
// rows of all groups are pooled, shuffled and dealt round-robin across all
// clients. skew = 1 gives single-group shards, skew = 0 reduces to a random
// partition.
Partition PartitionByAttribute(const TabularDataset& ds, int n_clients,
                               double skew, std::uint64_t seed);

// Fraction of positive labels.
double PositiveRate(const TabularDataset& ds);

}  // namespace fairattack

#endif  // FAIRATTACK_DATA_H_
