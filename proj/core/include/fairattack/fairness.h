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

// Group fairness metrics and the constraint-violation loss built on
// conditional moments of the classifier output.
//
// For k groups, the constraint matrix Q has one (+, -) row pair per unordered
// group pair (i, j):
//   +:  eta_i - eta_j <= eps
//   -:  eta_j - eta_i <= eps
// and the violation loss is  || ReLU(Q eta - eps) ||_2.

#ifndef FAIRATTACK_FAIRNESS_H_
#define FAIRATTACK_FAIRNESS_H_

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fairattack/data.h"

namespace fairattack {

// Absolute gap in positive-prediction rate; for k > 2 the largest pairwise
// gap. Throws DataError if a group has no samples.
double DemographicParity(std::span<const int> preds, std::span<const int> sensitive,
                         int group_count);

// max over y in {0,1} of the largest pairwise gap in P(pred = 1 | A, Y = y).
// Throws DataError if any (group, label) cell is empty.
double EqualizedOdds(std::span<const int> preds, std::span<const int> labels,
                     std::span<const int> sensitive, int group_count);

struct FairnessReport {
  double accuracy = 0.0;
  double dp = 0.0;
  double eod = 0.0;
  bool operator==(const FairnessReport&) const = default;
};

// Thresholds `probs` at 0.5 and computes accuracy, DP and EOD.
FairnessReport Evaluate(std::span<const double> probs, std::span<const int> labels,
                        std::span<const int> sensitive, int group_count);

// Preds[i] = probs[i] >= 0.5.
std::vector<int> Threshold(std::span<const double> probs);

enum class ConstraintSign { kPositive, kNegative };

struct ConstraintRow {
  int group_i = 0;
  int group_j = 0;
  ConstraintSign sign = ConstraintSign::kPositive;
};

struct ConstraintMatrix {
  RowMatrix q;  // (2 * C(k,2)) x k
  std::vector<ConstraintRow> row_labels;
  int group_count() const { return static_cast<int>(q.cols()); }
};

// Throws InvalidArgument for k < 2.
ConstraintMatrix BuildConstraintMatrix(int k);

enum class MomentMode {
  kDemographicParity,  // all samples
  kTruePositiveRate,   // samples with label 1
  kFalsePositiveRate,  // samples with label 0
};

std::string_view MomentModeName(MomentMode mode);

struct MomentVector {
  Eigen::VectorXd values;
  std::vector<int> counts;
};

// Per-group mean of `probs` over the samples selected by `mode`. Labels are
// required for the rate modes. Throws DataError when a (group, restriction)
// cell is empty.
MomentVector ConditionalMoments(std::span<const double> probs,
                                std::span<const int> sensitive, int group_count,
                                MomentMode mode, std::span<const int> labels = {});

// Soft moments use the probabilities directly; hard moments threshold them at
// 0.5 first (metric-faithful, zero gradient almost everywhere).
enum class MomentKind { kSoft, kHard };

struct FairnessLossSpec {
  MomentMode mode = MomentMode::kDemographicParity;
  double epsilon = 0.0;
  MomentKind kind = MomentKind::kSoft;
};

// || ReLU(Q eta - epsilon) ||_2. No regularization weight is applied here.
double FairnessLoss(std::span<const double> probs, std::span<const int> sensitive,
                    int group_count, const FairnessLossSpec& spec,
                    std::span<const int> labels = {});

// Analytic (sub)gradient of FairnessLoss with respect to every probability:
// norm -> ReLU mask -> Q^T -> 1/count of the sample's cell. Zero for samples
// outside the moment restriction and everywhere when the loss is zero.
Eigen::VectorXd FairnessLossGradProbs(std::span<const double> probs,
                                      std::span<const int> sensitive,
                                      int group_count, const FairnessLossSpec& spec,
                                      std::span<const int> labels = {});

// Central differences of FairnessLoss in each probability.
Eigen::VectorXd FairnessLossGradProbsFiniteDiff(std::span<const double> probs,
                                                std::span<const int> sensitive,
                                                int group_count,
                                                const FairnessLossSpec& spec,
                                                std::span<const int> labels = {},
                                                double step = 1e-4);

}  // namespace fairattack

#endif  // FAIRATTACK_FAIRNESS_H_
