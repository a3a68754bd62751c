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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "fairattack/errors.h"

namespace fairattack {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

constexpr char kSixRows[] =
    "age,color,sex,label\n"
    "20,red,M,yes\n"
    "30,blue,F,no\n"
    "40,red,F,yes\n"
    "50,green,M,no\n"
    "60,blue,M,no\n"
    "70,red,F,yes\n";

DatasetSchema SixRowSchema() {
  DatasetSchema s;
  s.label_column = "label";
  s.label_positive_value = "yes";
  s.sensitive_column = "sex";
  s.categorical_columns = {"color"};
  s.numeric_columns = {"age"};
  return s;
}

// `n` rows; group = i % groups, label = (i / groups) % 2, one feature.
TabularDataset Synthetic(std::size_t n, int groups) {
  TabularDataset ds;
  ds.features = RowMatrix::Zero(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    ds.sensitive.push_back(static_cast<int>(i % static_cast<std::size_t>(groups)));
    ds.labels.push_back(static_cast<int>((i / static_cast<std::size_t>(groups)) % 2));
  }
  ds.feature_names = {"x"};
  for (int g = 0; g < groups; ++g) ds.group_names.push_back("g" + std::to_string(g));
  ds.group_count = groups;
  return ds;
}

TEST(CsvTest, ParsesQuotesAndWhitespace) {
  const RawTable t = ParseCsv("a, b ,c\n1,\"x, y\",\"q\"\"z\"\n\n2,3,4\n");
  EXPECT_THAT(t.header, ElementsAre("a", "b", "c"));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_THAT(t.rows[0], ElementsAre("1", "x, y", "q\"z"));
  EXPECT_THAT(t.line_numbers, ElementsAre(2u, 4u));
}

TEST(CsvTest, WrongFieldCountReportsLine) {
  try {
    ParseCsv("a,b\n1,2\n3\n");
    FAIL() << "expected RowError";
  } catch (const RowError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_THAT(e.what(), HasSubstr("line 3"));
  }
}

TEST(EncodeTest, OneHotAndMinMax) {
  const TabularDataset ds = EncodeTable(ParseCsv(kSixRows), SixRowSchema());
  EXPECT_THAT(ds.feature_names, ElementsAre("age", "color=blue", "color=green", "color=red"));
  ASSERT_EQ(ds.rows(), 6u);
  EXPECT_DOUBLE_EQ(ds.features(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(ds.features(2, 0), 0.4);
  EXPECT_DOUBLE_EQ(ds.features(5, 0), 1.0);
  for (Eigen::Index r = 0; r < 6; ++r) {
    EXPECT_DOUBLE_EQ(ds.features.row(r).tail(3).sum(), 1.0);
  }
  EXPECT_EQ(ds.features(1, 1), 1.0);  // blue
  EXPECT_EQ(ds.features(3, 2), 1.0);  // green
  EXPECT_THAT(ds.labels, ElementsAre(1, 0, 1, 0, 0, 1));
  EXPECT_THAT(ds.group_names, ElementsAre("F", "M"));
  EXPECT_THAT(ds.sensitive, ElementsAre(1, 0, 0, 1, 1, 0));
  EXPECT_EQ(ds.group_count, 2);
}

TEST(EncodeTest, ConstantNumericColumnMapsToZero) {
  const TabularDataset ds = EncodeTable(
      ParseCsv("k,s,y\n5,a,1\n5,b,0\n5,a,1\n"),
      DatasetSchema{"y", "1", "s", std::nullopt, {}, {"k"}, {}});
  EXPECT_TRUE((ds.features.col(0).array() == 0.0).all());
}

TEST(EncodeTest, NumericThresholdSensitive) {
  DatasetSchema s{"y", "1", "age", 25.0, {}, {"age"}, {}};
  const TabularDataset ds = EncodeTable(ParseCsv("age,y\n20,1\n25,0\n30,1\n"), s);
  EXPECT_THAT(ds.sensitive, ElementsAre(0, 1, 1));
  EXPECT_THAT(ds.group_names, ElementsAre("<25", ">=25"));
}

TEST(EncodeTest, DropsMissingRows) {
  DatasetSchema s = SixRowSchema();
  s.na_values = {"?"};
  const TabularDataset ds =
      EncodeTable(ParseCsv("age,color,sex,label\n1,?,M,yes\n2,red,F,no\n3,red,M,no\n"), s);
  EXPECT_EQ(ds.rows(), 2u);
}

TEST(EncodeTest, MissingColumnIsSchemaError) {
  DatasetSchema s = SixRowSchema();
  s.numeric_columns = {"height"};
  EXPECT_THROW(EncodeTable(ParseCsv(kSixRows), s), SchemaError);
  s = SixRowSchema();
  s.label_column = "outcome";
  EXPECT_THROW(EncodeTable(ParseCsv(kSixRows), s), SchemaError);
}

TEST(EncodeTest, ContradictorySchemas) {
  DatasetSchema s = SixRowSchema();
  s.categorical_columns.push_back("label");
  EXPECT_THROW(s.Validate(), SchemaError);
  s = SixRowSchema();
  s.categorical_columns.push_back("age");
  EXPECT_THROW(s.Validate(), SchemaError);
}

TEST(EncodeTest, UnparseableNumberReportsLine) {
  std::string text = kSixRows;
  text.replace(text.find("40"), 2, "4x");
  try {
    EncodeTable(ParseCsv(text), SixRowSchema());
    FAIL() << "expected RowError";
  } catch (const RowError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_THAT(e.what(), HasSubstr("age"));
  }
}

TEST(EncodeTest, SingleGroupRejected) {
  EXPECT_THROW(EncodeTable(ParseCsv("x,s,y\n1,a,1\n2,a,0\n"),
                           DatasetSchema{"y", "1", "s", std::nullopt, {}, {"x"}, {}}),
               DataError);
}

TEST(EncodeTest, RefusesEncodedTables) {
  const TabularDataset ds = EncodeTable(ParseCsv(kSixRows), SixRowSchema());
  const RawTable exported = ExportEncoded(ds);
  EXPECT_TRUE(exported.encoded);
  EXPECT_THROW(EncodeTable(exported, SixRowSchema()), DataError);
}

TEST(DatasetTest, InvariantsAndSubset) {
  TabularDataset ds = Synthetic(10, 2);
  EXPECT_NO_THROW(ds.CheckInvariants());
  const std::vector<std::size_t> idx = {7, 2};
  const TabularDataset sub = Subset(ds, idx);
  EXPECT_EQ(sub.rows(), 2u);
  EXPECT_EQ(sub.features(0, 0), 7.0);
  EXPECT_EQ(sub.sensitive[1], 0);
  ds.labels[0] = 2;
  EXPECT_THROW(ds.CheckInvariants(), DataError);
}

TEST(SplitTest, StratifiedAndDisjoint) {
  const TabularDataset ds = Synthetic(200, 2);
  const TrainTestSplit s = StratifiedSplit(ds, 0.2, 5);
  EXPECT_EQ(s.test.size(), 40u);
  EXPECT_EQ(s.train.size(), 160u);
  int test_pos = 0;
  for (std::size_t i : s.test) test_pos += ds.labels[i];
  EXPECT_EQ(test_pos, 20);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 200u);
  EXPECT_EQ(StratifiedSplit(ds, 0.2, 5).test, s.test);
  EXPECT_NE(StratifiedSplit(ds, 0.2, 6).test, s.test);
}

TEST(PartitionTest, RandomSizes) {
  const Partition even = PartitionRandom(Synthetic(100, 2), 10, 1);
  for (const auto& shard : even.client_shards) EXPECT_EQ(shard.size(), 10u);
  const Partition odd = PartitionRandom(Synthetic(101, 2), 10, 1);
  std::vector<std::size_t> sizes;
  for (const auto& shard : odd.client_shards) sizes.push_back(shard.size());
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 10u), 9);
  EXPECT_EQ(sizes.back(), 11u);
  EXPECT_NO_THROW(odd.Validate(101));
}

TEST(PartitionTest, RandomIsDeterministicPerSeed) {
  const TabularDataset ds = Synthetic(57, 2);
  EXPECT_EQ(PartitionRandom(ds, 4, 9).client_shards, PartitionRandom(ds, 4, 9).client_shards);
  EXPECT_NE(PartitionRandom(ds, 4, 9).client_shards, PartitionRandom(ds, 4, 10).client_shards);
  EXPECT_THROW(PartitionRandom(ds, 58, 1), InvalidArgument);
}

TEST(PartitionTest, ValidateCatchesOverlapAndEmptyShards) {
  Partition p;
  p.client_shards = {{0, 1}, {1, 2}};
  EXPECT_THROW(p.Validate(3), DataError);
  p.client_shards = {{0, 1}, {}};
  EXPECT_THROW(p.Validate(3), DataError);
  p.client_shards = {{0, 5}};
  EXPECT_THROW(p.Validate(3), DataError);
}

double HomeShare(const TabularDataset& ds, const std::vector<std::size_t>& shard, int home) {
  const auto hits = std::count_if(shard.begin(), shard.end(),
                                  [&](std::size_t i) { return ds.sensitive[i] == home; });
  return static_cast<double>(hits) / static_cast<double>(shard.size());
}

TEST(PartitionTest, AttributeFullSkewGivesSingleGroupShards) {
  const TabularDataset ds = Synthetic(1000, 2);
  const Partition p = PartitionByAttribute(ds, 10, 1.0, 3);
  for (int c = 0; c < 10; ++c) {
    EXPECT_EQ(HomeShare(ds, p.client_shards[static_cast<std::size_t>(c)], c % 2), 1.0);
  }
}

TEST(PartitionTest, AttributeZeroSkewMatchesPopulation) {
  // Group 1 is 30% of the rows; 2000-row shards keep the binomial noise
  // near one percentage point.
  TabularDataset ds = Synthetic(20000, 2);
  for (std::size_t i = 0; i < ds.rows(); ++i) ds.sensitive[i] = (i % 10) < 3 ? 1 : 0;
  const Partition p = PartitionByAttribute(ds, 10, 0.0, 4);
  for (const auto& shard : p.client_shards) {
    EXPECT_NEAR(HomeShare(ds, shard, 1), 0.3, 0.05);
  }
}

TEST(PartitionTest, AttributePartialSkew) {
  const TabularDataset ds = Synthetic(2000, 2);
  const Partition p = PartitionByAttribute(ds, 10, 0.8, 5);
  for (int c = 0; c < 10; ++c) {
    // 0.8 own rows plus half of the 0.2 pooled remainder: about 0.9.
    EXPECT_GE(HomeShare(ds, p.client_shards[static_cast<std::size_t>(c)], c % 2), 0.75);
  }
  EXPECT_THROW(PartitionByAttribute(ds, 10, 1.5, 5), InvalidArgument);
  EXPECT_THROW(PartitionByAttribute(Synthetic(30, 3), 2, 1.0, 5), InvalidArgument);
}

TEST(AdultTest, EncodesWithExpectedShape) {
  const std::filesystem::path path =
      std::filesystem::path(FAIRATTACK_SOURCE_DIR) / "data" / "adult.csv";
  DatasetSchema s;
  s.label_column = "income";
  s.label_positive_value = ">50K";
  s.sensitive_column = "sex";
  // The sensitive attribute defines the groups but is not an input feature.
  s.categorical_columns = {"workclass",    "education", "marital_status", "occupation",
                           "relationship", "race",      "native_country"};
  s.numeric_columns = {"age",          "fnlwgt",       "education_num",
                       "capital_gain", "capital_loss", "hours_per_week"};
  s.na_values = {"?"};
  const TabularDataset ds = LoadCsv(path, s);
  EXPECT_EQ(ds.rows(), 45222u);
  // Distinct values of the seven categorical columns over complete rows, plus
  // six numeric columns (counted independently from the CSV).
  EXPECT_EQ(ds.cols(), 102u);
  EXPECT_THAT(ds.group_names, ElementsAre("Female", "Male"));
  // Roughly one positive for every three negatives.
  const double pos = PositiveRate(ds);
  EXPECT_NEAR(pos / (1.0 - pos), 1.0 / 3.0, 0.03);
  EXPECT_TRUE((ds.features.array() >= 0.0).all());
  EXPECT_TRUE((ds.features.array() <= 1.0).all());
}

TEST(CsvTest, MissingFileIsDataError) {
  EXPECT_THROW(ReadCsv("/nonexistent/file.csv"), DataError);
}

}  // namespace
}  // namespace fairattack
