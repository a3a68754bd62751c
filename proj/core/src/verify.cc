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

#include "fairattack/verify.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "fairattack/aggregation.h"
#include "fairattack/attack.h"
#include "fairattack/fairness.h"
#include "fairattack/model.h"
#include "fairattack/random.h"

namespace fairattack {
namespace {

std::string Fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

// ||a - b|| / max(||a|| + ||b||, tiny)
double RelativeError(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = std::max(a.norm() + b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

RowMatrix RandomMatrix(int rows, int cols, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

VerifyCheck CheckBackward(Rng& rng) {
  constexpr int kNetworks = 20;
  constexpr double kStep = 1e-6;
  double worst = 0.0;
  for (int t = 0; t < kNetworks; ++t) {
    std::uniform_int_distribution<int> dim(1, 5);
    const Architecture arch{dim(rng), dim(rng), dim(rng)};
    const int n = dim(rng) + 1;
    const ModelParams p = ModelParams::Init(arch, rng());
    const RowMatrix x = RandomMatrix(n, arch.input_dim, rng);
    std::vector<int> y(static_cast<std::size_t>(n));
    std::vector<double> extra(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() & 1U);
      extra[static_cast<std::size_t>(i)] = u(rng) - 1.0;
      w[static_cast<std::size_t>(i)] = u(rng);
    }
    auto objective = [&](const ModelParams& q) {
      const Eigen::VectorXd probs = Forward(q, x);
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += extra[static_cast<std::size_t>(i)] * probs[i];
      // Unclamped BCE: random inputs keep probabilities well inside (0, 1).
      double bce = 0.0;
      for (int i = 0; i < n; ++i) {
        const double pi = probs[i];
        const double yi = y[static_cast<std::size_t>(i)];
        bce -= w[static_cast<std::size_t>(i)] * (yi * std::log(pi) + (1 - yi) * std::log(1 - pi));
      }
      return bce / n + v;
    };
    const Gradient g = Backward(p, x, y, extra, w);
    const Eigen::VectorXd flat = p.Flatten();
    Eigen::VectorXd fd(flat.size());
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
      Eigen::VectorXd plus = flat, minus = flat;
      plus[k] += kStep;
      minus[k] -= kStep;
      fd[k] = (objective(ModelParams::Unflatten(arch, plus)) -
               objective(ModelParams::Unflatten(arch, minus))) /
              (2 * kStep);
    }
    worst = std::max(worst, RelativeError(g.Flatten(), fd));
  }
  return {"backward matches central differences", worst <= 1e-4,
          "max relative error " + Fmt(worst) + " over " + std::to_string(kNetworks) +
              " networks"};
}

// Pairwise violation loss computed without the constraint matrix.
double PairwiseLoss(const std::vector<double>& probs, const std::vector<int>& groups,
                    const std::vector<int>& labels, int k, MomentMode mode, double eps,
                    double* kink_margin) {
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (mode == MomentMode::kTruePositiveRate && labels[i] != 1) continue;
    if (mode == MomentMode::kFalsePositiveRate && labels[i] != 0) continue;
    sum[static_cast<std::size_t>(groups[i])] += probs[i];
    ++count[static_cast<std::size_t>(groups[i])];
  }
  double sq = 0.0;
  *kink_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double d = sum[static_cast<std::size_t>(i)] / count[static_cast<std::size_t>(i)] -
                       sum[static_cast<std::size_t>(j)] / count[static_cast<std::size_t>(j)];
      sq += std::pow(std::max(0.0, d - eps), 2) + std::pow(std::max(0.0, -d - eps), 2);
      *kink_margin = std::min(*kink_margin, std::abs(std::abs(d) - eps));
    }
  }
  return std::sqrt(sq);
}

VerifyCheck CheckFairnessLoss(Rng& rng) {
  constexpr int kInstances = 100;
  double worst_loss = 0.0, worst_grad = 0.0;
  int grad_checked = 0;
  const MomentMode modes[] = {MomentMode::kDemographicParity, MomentMode::kTruePositiveRate,
                              MomentMode::kFalsePositiveRate};
  for (int t = 0; t < kInstances; ++t) {
    const int k = 2 + static_cast<int>(rng() % 2);
    const MomentMode mode = modes[rng() % 3];
    // Every (group, label) cell gets at least one sample.
    std::vector<int> groups, labels;
    for (int g = 0; g < k; ++g) {
      for (int y = 0; y < 2; ++y) {
        groups.push_back(g);
        labels.push_back(y);
      }
    }
    const int extra = static_cast<int>(rng() % static_cast<std::uint64_t>(13 - 2 * k));
    for (int i = 0; i < extra; ++i) {
      groups.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(k)));
      labels.push_back(static_cast<int>(rng() & 1U));
    }
    std::uniform_real_distribution<double> u(0.01, 0.99);
    std::vector<double> probs(groups.size());
    for (double& p : probs) p = u(rng);
    const double eps = (rng() % 2 == 0) ? 0.0 : u(rng) * 0.2;
    const FairnessLossSpec spec{mode, eps, MomentKind::kSoft};
    const double got = FairnessLoss(probs, groups, k, spec, labels);
    double margin = 0.0;
    const double want = PairwiseLoss(probs, groups, labels, k, mode, eps, &margin);
    worst_loss = std::max(worst_loss, std::abs(got - want));
    if (want > 1e-3 && margin > 1e-3) {
      const Eigen::VectorXd g = FairnessLossGradProbs(probs, groups, k, spec, labels);
      const Eigen::VectorXd fd = FairnessLossGradProbsFiniteDiff(probs, groups, k, spec, labels);
      worst_grad = std::max(worst_grad, RelativeError(g, fd));
      ++grad_checked;
    }
  }
  return {"fairness loss matches pairwise oracle and finite differences",
          worst_loss <= 1e-12 && worst_grad <= 1e-3,
          "max loss error " + Fmt(worst_loss) + ", max gradient relative error " +
              Fmt(worst_grad) + " (" + std::to_string(grad_checked) + " gradients)"};
}

std::vector<ClientUpdate> RandomUpdates(Rng& rng, int n, int dim) {
  std::vector<ClientUpdate> out;
  for (int i = 0; i < n; ++i) {
    ClientUpdate u;
    u.delta = RandomMatrix(dim, 1, rng).col(0);
    u.sample_count = 1 + static_cast<std::int64_t>(rng() % 50);
    u.client_id = i;
    u.local_fairness = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    out.push_back(std::move(u));
  }
  // Present them in a scrambled order.
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

VerifyCheck CheckAggregation(Rng& rng) {
  constexpr int kInstances = 50;
  int failures = 0;
  std::string first_failure;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first_failure = what;
  };
  for (int t = 0; t < kInstances; ++t) {
    const int f = static_cast<int>(rng() % 3);
    const int n = f + 3 + static_cast<int>(rng() % static_cast<std::uint64_t>(6 - f));
    const int dim = 1 + static_cast<int>(rng() % 4);
    const auto updates = RandomUpdates(rng, n, dim);

    // Krum: exhaustive score minimization.
    double best = std::numeric_limits<double>::infinity();
    int best_id = -1;
    const ClientUpdate* best_update = nullptr;
    for (const ClientUpdate& a : updates) {
      std::vector<double> d;
      for (const ClientUpdate& b : updates) {
        if (&a != &b) d.push_back((a.delta - b.delta).squaredNorm());
      }
      std::sort(d.begin(), d.end());
      const double score = std::accumulate(d.begin(), d.begin() + (n - f - 2), 0.0);
      if (score < best || (score == best && a.client_id < best_id)) {
        best = score;
        best_id = a.client_id;
        best_update = &a;
      }
    }
    const KrumSelection krum = Krum(updates, f);
    if (krum.client_id != best_id || krum.delta != best_update->delta) fail("krum");

    // Median and trimmed mean against per-coordinate sorting.
    const Eigen::VectorXd med = CoordinateMedian(updates);
    const double ratio = 0.1 * static_cast<double>(rng() % 5);
    const Eigen::VectorXd tm = TrimmedMean(updates, ratio);
    const int trim = static_cast<int>(std::floor(ratio * n));
    for (int c = 0; c < dim; ++c) {
      std::vector<double> col;
      for (const ClientUpdate& u : updates) col.push_back(u.delta[c]);
      std::sort(col.begin(), col.end());
      const double m = n % 2 == 1 ? col[static_cast<std::size_t>(n / 2)]
                                  : 0.5 * (col[static_cast<std::size_t>(n / 2 - 1)] +
                                           col[static_cast<std::size_t>(n / 2)]);
      if (std::abs(med[c] - m) > 1e-12) fail("median");
      double s = 0.0;
      for (int i = trim; i < n - trim; ++i) s += col[static_cast<std::size_t>(i)];
      if (std::abs(tm[c] - s / (n - 2 * trim)) > 1e-12) fail("trimmed mean");
    }

    // FedAvg with equal counts is the plain mean.
    auto equal = updates;
    for (ClientUpdate& u : equal) u.sample_count = 7;
    if ((FedAvg(equal) - Mean(equal)).cwiseAbs().maxCoeff() > 1e-12) fail("fedavg");
  }
  return {"aggregation rules match brute-force oracles", failures == 0,
          failures == 0 ? std::to_string(kInstances) + " instances"
                        : std::to_string(failures) + " mismatches, first: " + first_failure};
}

VerifyCheck CheckReductions(Rng& rng) {
  std::vector<std::string> problems;
  // beta = 0 FairFed is FedAvg; select_m = 1 Multi-Krum is Krum.
  for (int t = 0; t < 20; ++t) {
    const auto updates = RandomUpdates(rng, 7, 5);
    if ((FairFed(updates, 0.2, 0.0) - FedAvg(updates)).cwiseAbs().maxCoeff() > 1e-12) {
      problems.push_back("fairfed(beta=0) != fedavg");
      break;
    }
    const KrumSelection k = Krum(updates, 2);
    const AggregateResult mk = MultiKrum(updates, 2, 1);
    if (mk.delta != k.delta || mk.selected_ids != std::vector<int>{k.client_id}) {
      problems.push_back("multikrum(m=1) != krum");
      break;
    }
  }
  // lambda = 0 malicious training is honest training, bit for bit.
  {
    TabularDataset shard;
    const int n = 40;
    shard.features = RandomMatrix(n, 4, rng);
    shard.group_count = 2;
    for (int i = 0; i < n; ++i) {
      shard.labels.push_back(static_cast<int>(rng() & 1U));
      shard.sensitive.push_back(i % 2);
    }
    const ModelParams global = ModelParams::Init({4, 6, 3}, rng());
    TrainOptions opts;
    opts.lr = 0.05;
    AttackConfig cfg;
    cfg.lambda = 0.0;
    const std::uint64_t seed = rng();
    const LocalTrainResult honest = HonestLocalTrain(global, shard, opts, seed);
    const LocalTrainResult attack = MaliciousLocalTrain(global, shard, cfg, opts, seed);
    if (honest.update.delta != attack.update.delta) {
      problems.push_back("lambda=0 attack != honest training");
    }
  }
  std::string detail = "fairfed(beta=0), multikrum(m=1), lambda=0 attack";
  if (!problems.empty()) detail = problems.front();
  return {"reduction identities hold", problems.empty(), detail};
}

}  // namespace

std::vector<VerifyCheck> RunVerification(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VerifyCheck> out;
  out.push_back(CheckBackward(rng));
  out.push_back(CheckFairnessLoss(rng));
  out.push_back(CheckAggregation(rng));
  out.push_back(CheckReductions(rng));
  return out;
}

}  // namespace fairattack
