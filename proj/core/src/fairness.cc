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

#include "fairattack/fairness.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairattack/errors.h"

namespace fairattack {
namespace {

void CheckGroups(std::span<const int> sensitive, int group_count) {
  if (group_count < 2) throw InvalidArgument("group_count must be >= 2");
  for (int a : sensitive) {
    if (a < 0 || a >= group_count) {
      throw InvalidArgument("sensitive index " + std::to_string(a) +
                            " outside [0, group_count)");
    }
  }
}

// Largest pairwise gap between per-group positive rates over the samples
// where `select(i)` holds.
template <typename Select>
double MaxRateGap(std::span<const int> preds, std::span<const int> sensitive,
                  int group_count, Select select, const char* what) {
  std::vector<double> pos(static_cast<std::size_t>(group_count), 0.0);
  std::vector<double> tot(static_cast<std::size_t>(group_count), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!select(i)) continue;
    const auto g = static_cast<std::size_t>(sensitive[i]);
    pos[g] += preds[i] != 0 ? 1.0 : 0.0;
    tot[g] += 1.0;
  }
  double lo = 1.0, hi = 0.0;
  for (int g = 0; g < group_count; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    if (tot[gi] == 0.0) {
      throw DataError(std::string(what) + ": group " + std::to_string(g) +
                      " has no samples");
    }
    const double rate = pos[gi] / tot[gi];
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return hi - lo;
}

bool InCell(MomentMode mode, std::span<const int> labels, std::size_t i) {
  switch (mode) {
    case MomentMode::kDemographicParity:
      return true;
    case MomentMode::kTruePositiveRate:
      return labels[i] == 1;
    case MomentMode::kFalsePositiveRate:
      return labels[i] == 0;
  }
  return false;
}

void CheckLengths(std::span<const double> probs, std::span<const int> sensitive,
                  MomentMode mode, std::span<const int> labels) {
  if (probs.size() != sensitive.size()) {
    throw InvalidArgument("probs and sensitive differ in length");
  }
  if (mode != MomentMode::kDemographicParity && labels.size() != probs.size()) {
    throw InvalidArgument(std::string("labels are required for ") +
                          std::string(MomentModeName(mode)) + " moments");
  }
}

std::vector<double> Harden(std::span<const double> probs) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= 0.5 ? 1.0 : 0.0;
  return out;
}

// Q eta - epsilon.
Eigen::VectorXd Violations(const ConstraintMatrix& q, const MomentVector& m,
                           double epsilon) {
  return (q.q * m.values).array() - epsilon;
}

}  // namespace

double DemographicParity(std::span<const int> preds, std::span<const int> sensitive,
                         int group_count) {
  if (preds.size() != sensitive.size()) {
    throw InvalidArgument("DemographicParity: length mismatch");
  }
  CheckGroups(sensitive, group_count);
  return MaxRateGap(preds, sensitive, group_count, [](std::size_t) { return true; },
                    "DemographicParity");
}

double EqualizedOdds(std::span<const int> preds, std::span<const int> labels,
                     std::span<const int> sensitive, int group_count) {
  if (preds.size() != sensitive.size() || preds.size() != labels.size()) {
    throw InvalidArgument("EqualizedOdds: length mismatch");
  }
  CheckGroups(sensitive, group_count);
  double worst = 0.0;
  for (int y : {0, 1}) {
    worst = std::max(worst, MaxRateGap(
                                preds, sensitive, group_count,
                                [&](std::size_t i) { return labels[i] == y; },
                                "EqualizedOdds"));
  }
  return worst;
}

std::vector<int> Threshold(std::span<const double> probs) {
  std::vector<int> preds(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = probs[i] >= 0.5 ? 1 : 0;
  return preds;
}

FairnessReport Evaluate(std::span<const double> probs, std::span<const int> labels,
                        std::span<const int> sensitive, int group_count) {
  if (probs.size() != labels.size()) throw InvalidArgument("Evaluate: length mismatch");
  if (probs.empty()) throw InvalidArgument("Evaluate: empty input");
  const auto preds = Threshold(probs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
  FairnessReport r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  r.dp = DemographicParity(preds, sensitive, group_count);
  r.eod = EqualizedOdds(preds, labels, sensitive, group_count);
  return r;
}

ConstraintMatrix BuildConstraintMatrix(int k) {
  if (k < 2) throw InvalidArgument("constraint matrix needs at least two groups");
  const int pairs = k * (k - 1) / 2;
  ConstraintMatrix m;
  m.q = RowMatrix::Zero(2 * pairs, k);
  int row = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      m.q(row, i) = 1.0;
      m.q(row, j) = -1.0;
      m.row_labels.push_back({i, j, ConstraintSign::kPositive});
      ++row;
      m.q(row, i) = -1.0;
      m.q(row, j) = 1.0;
      m.row_labels.push_back({i, j, ConstraintSign::kNegative});
      ++row;
    }
  }
  return m;
}

std::string_view MomentModeName(MomentMode mode) {
  switch (mode) {
    case MomentMode::kDemographicParity:
      return "dp";
    case MomentMode::kTruePositiveRate:
      return "eod_tpr";
    case MomentMode::kFalsePositiveRate:
      return "eod_fpr";
  }
  return "?";
}

MomentVector ConditionalMoments(std::span<const double> probs,
                                std::span<const int> sensitive, int group_count,
                                MomentMode mode, std::span<const int> labels) {
  CheckLengths(probs, sensitive, mode, labels);
  CheckGroups(sensitive, group_count);
  MomentVector m;
  m.values = Eigen::VectorXd::Zero(group_count);
  m.counts.assign(static_cast<std::size_t>(group_count), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!InCell(mode, labels, i)) continue;
    m.values[sensitive[i]] += probs[i];
    ++m.counts[static_cast<std::size_t>(sensitive[i])];
  }
  for (int g = 0; g < group_count; ++g) {
    const int c = m.counts[static_cast<std::size_t>(g)];
    if (c == 0) {
      throw DataError(std::string(MomentModeName(mode)) + " moment: group " +
                      std::to_string(g) + " has no samples in its cell");
    }
    m.values[g] /= static_cast<double>(c);
  }
  return m;
}

double FairnessLoss(std::span<const double> probs, std::span<const int> sensitive,
                    int group_count, const FairnessLossSpec& spec,
                    std::span<const int> labels) {
  if (spec.epsilon < 0.0) throw InvalidArgument("fairness budget must be >= 0");
  MomentVector m;
  if (spec.kind == MomentKind::kHard) {
    const auto hard = Harden(probs);
    m = ConditionalMoments(hard, sensitive, group_count, spec.mode, labels);
  } else {
    m = ConditionalMoments(probs, sensitive, group_count, spec.mode, labels);
  }
  const auto q = BuildConstraintMatrix(group_count);
  return Violations(q, m, spec.epsilon).cwiseMax(0.0).norm();
}

Eigen::VectorXd FairnessLossGradProbs(std::span<const double> probs,
                                      std::span<const int> sensitive,
                                      int group_count, const FairnessLossSpec& spec,
                                      std::span<const int> labels) {
  if (spec.epsilon < 0.0) throw InvalidArgument("fairness budget must be >= 0");
  const auto m = ConditionalMoments(probs, sensitive, group_count, spec.mode, labels);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(probs.size()));
  if (spec.kind == MomentKind::kHard) return grad;

  const auto q = BuildConstraintMatrix(group_count);
  const Eigen::VectorXd active = Violations(q, m, spec.epsilon).cwiseMax(0.0);
  const double norm = active.norm();
  if (norm == 0.0) return grad;

  // d||r|| / d eta = Q^T (r / ||r||); the ReLU mask is implicit since r = 0
  // on inactive rows.
  const Eigen::VectorXd d_eta = q.q.transpose() * (active / norm);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!InCell(spec.mode, labels, i)) continue;
    const int g = sensitive[i];
    grad[static_cast<Eigen::Index>(i)] =
        d_eta[g] / static_cast<double>(m.counts[static_cast<std::size_t>(g)]);
  }
  return grad;
}

Eigen::VectorXd FairnessLossGradProbsFiniteDiff(std::span<const double> probs,
                                                std::span<const int> sensitive,
                                                int group_count,
                                                const FairnessLossSpec& spec,
                                                std::span<const int> labels,
                                                double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  std::vector<double> work(probs.begin(), probs.end());
  Eigen::VectorXd grad(static_cast<Eigen::Index>(probs.size()));
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double orig = work[i];
    work[i] = orig + step;
    const double up = FairnessLoss(work, sensitive, group_count, spec, labels);
    work[i] = orig - step;
    const double down = FairnessLoss(work, sensitive, group_count, spec, labels);
    work[i] = orig;
    grad[static_cast<Eigen::Index>(i)] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace fairattack
