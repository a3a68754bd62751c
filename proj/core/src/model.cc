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

#include "fairattack/model.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fairattack/errors.h"
#include "fairattack/random.h"

namespace fairattack {
namespace {

constexpr double kProbClamp = 1e-7;

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

template <typename T>
T ZerosOf(const Architecture& arch) {
  if (arch.input_dim < 1 || arch.hidden1 < 1 || arch.hidden2 < 1) {
    throw InvalidArgument("architecture dimensions must be positive");
  }
  T t;
  t.w1 = RowMatrix::Zero(arch.input_dim, arch.hidden1);
  t.b1 = Eigen::VectorXd::Zero(arch.hidden1);
  t.w2 = RowMatrix::Zero(arch.hidden1, arch.hidden2);
  t.b2 = Eigen::VectorXd::Zero(arch.hidden2);
  t.w3 = Eigen::VectorXd::Zero(arch.hidden2);
  t.b3 = 0.0;
  return t;
}

void CheckInput(const ModelParams& p, const RowMatrix& x) {
  if (x.cols() != p.w1.rows()) {
    throw InvalidArgument("input has " + std::to_string(x.cols()) +
                          " columns, model expects " + std::to_string(p.w1.rows()));
  }
}

}  // namespace

std::size_t Architecture::ParameterCount() const {
  const auto d = static_cast<std::size_t>(input_dim);
  const auto h1 = static_cast<std::size_t>(hidden1);
  const auto h2 = static_cast<std::size_t>(hidden2);
  return d * h1 + h1 + h1 * h2 + h2 + h2 + 1;
}

Architecture DenseStack::architecture() const {
  return Architecture{static_cast<int>(w1.rows()), static_cast<int>(w1.cols()),
                      static_cast<int>(w2.cols())};
}

std::size_t DenseStack::size() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() +
                                  w3.size() + 1);
}

bool DenseStack::AllFinite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         w3.allFinite() && std::isfinite(b3);
}

Eigen::VectorXd DenseStack::Flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
  Eigen::Index pos = 0;
  auto put = [&](const double* data, Eigen::Index n) {
    std::copy(data, data + n, flat.data() + pos);
    pos += n;
  };
  put(w1.data(), w1.size());  // row-major storage
  put(b1.data(), b1.size());
  put(w2.data(), w2.size());
  put(b2.data(), b2.size());
  put(w3.data(), w3.size());
  flat[pos] = b3;
  return flat;
}

void DenseStack::AssignFlat(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(size())) {
    throw InvalidArgument("flat vector has length " + std::to_string(flat.size()) +
                          ", expected " + std::to_string(size()));
  }
  Eigen::Index pos = 0;
  auto take = [&](double* data, Eigen::Index n) {
    std::copy(flat.data() + pos, flat.data() + pos + n, data);
    pos += n;
  };
  take(w1.data(), w1.size());
  take(b1.data(), b1.size());
  take(w2.data(), w2.size());
  take(b2.data(), b2.size());
  take(w3.data(), w3.size());
  b3 = flat[pos];
}

bool DenseStack::operator==(const DenseStack& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() &&
         w2.cols() == o.w2.cols() && w1 == o.w1 && b1 == o.b1 && w2 == o.w2 &&
         b2 == o.b2 && w3 == o.w3 && b3 == o.b3;
}

ModelParams ModelParams::Zeros(const Architecture& arch) {
  return ZerosOf<ModelParams>(arch);
}

ModelParams ModelParams::Init(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = Zeros(arch);
  Rng rng(seed);
  auto fill = [&rng](double* data, Eigen::Index n, int fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < n; ++i) data[i] = dist(rng);
  };
  fill(p.w1.data(), p.w1.size(), arch.input_dim);
  fill(p.b1.data(), p.b1.size(), arch.input_dim);
  fill(p.w2.data(), p.w2.size(), arch.hidden1);
  fill(p.b2.data(), p.b2.size(), arch.hidden1);
  fill(p.w3.data(), p.w3.size(), arch.hidden2);
  fill(&p.b3, 1, arch.hidden2);
  return p;
}

ModelParams ModelParams::Unflatten(const Architecture& arch,
                                   const Eigen::VectorXd& flat) {
  ModelParams p = Zeros(arch);
  p.AssignFlat(flat);
  return p;
}

Gradient Gradient::Zeros(const Architecture& arch) { return ZerosOf<Gradient>(arch); }

ForwardTrace Trace(const ModelParams& p, const RowMatrix& x) {
  CheckInput(p, x);
  ForwardTrace t;
  // Tabular inputs are mostly one-hot zeros; accumulate only non-zero terms.
  t.h1.resize(x.rows(), p.w1.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    t.h1.row(i) = p.b1.transpose();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (v != 0.0) t.h1.row(i) += v * p.w1.row(j);
    }
  }
  t.h1 = t.h1.cwiseMax(0.0);
  // Coefficient-wise products: every row is computed independently of the
  // batch it belongs to, and small batches avoid GEMM packing overhead.
  t.h2.noalias() = t.h1.lazyProduct(p.w2);
  t.h2.rowwise() += p.b2.transpose();
  t.h2 = t.h2.cwiseMax(0.0);
  Eigen::VectorXd z = t.h2.lazyProduct(p.w3);
  t.probs = z.unaryExpr([&p](double v) { return Sigmoid(v + p.b3); });
  return t;
}

Eigen::VectorXd Forward(const ModelParams& p, const RowMatrix& x) {
  return Trace(p, x).probs;
}

double BceLoss(std::span<const double> probs, std::span<const int> labels,
               std::span<const double> weights) {
  if (probs.size() != labels.size()) {
    throw InvalidArgument("BceLoss: probs and labels differ in length");
  }
  if (!weights.empty() && weights.size() != probs.size()) {
    throw InvalidArgument("BceLoss: weights length mismatch");
  }
  if (probs.empty()) throw InvalidArgument("BceLoss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double q = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    const double term = labels[i] == 1 ? -std::log(q) : -std::log(1.0 - q);
    total += weights.empty() ? term : weights[i] * term;
  }
  return total / static_cast<double>(probs.size());
}

namespace {

// Everything but the first-layer weight gradient, plus the first-layer
// pre-activation error d1 from which that gradient follows.
struct PartialGradient {
  Gradient g;
  RowMatrix d1;
};

PartialGradient BackwardExceptW1(const ModelParams& p, const RowMatrix& x,
                                 const ForwardTrace& trace, std::span<const int> labels,
                                 std::span<const double> extra_output_grad,
                                 std::span<const double> sample_weights) {
  CheckInput(p, x);
  const auto n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n || static_cast<std::size_t>(trace.probs.size()) != n) {
    throw InvalidArgument("Backward: labels/trace length does not match batch");
  }
  if (!extra_output_grad.empty() && extra_output_grad.size() != n) {
    throw InvalidArgument("Backward: extra_output_grad needs one entry per sample");
  }
  if (!sample_weights.empty() && sample_weights.size() != n) {
    throw InvalidArgument("Backward: sample_weights needs one entry per sample");
  }
  if (n == 0) throw InvalidArgument("Backward: empty batch");

  // dL/dz at the output logit.
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd dz(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double prob = trace.probs[static_cast<Eigen::Index>(i)];
    const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
    double g = w * (prob - static_cast<double>(labels[i])) * inv_n;
    if (!extra_output_grad.empty()) g += extra_output_grad[i] * prob * (1.0 - prob);
    dz[static_cast<Eigen::Index>(i)] = g;
  }

  PartialGradient out;
  Gradient& g = out.g;
  g.w3.noalias() = trace.h2.transpose().lazyProduct(dz);
  g.b3 = dz.sum();

  RowMatrix d2 = dz * p.w3.transpose();
  d2 = d2.cwiseProduct((trace.h2.array() > 0.0).cast<double>().matrix());
  g.w2.noalias() = trace.h1.transpose().lazyProduct(d2);
  g.b2 = d2.colwise().sum().transpose();

  out.d1.noalias() = d2.lazyProduct(p.w2.transpose());
  out.d1 = out.d1.cwiseProduct((trace.h1.array() > 0.0).cast<double>().matrix());
  g.b1 = out.d1.colwise().sum().transpose();
  return out;
}

// Row j of x^T d1, accumulated over the batch rows in order. Only inputs that
// are non-zero contribute.
void AccumulateW1Row(const RowMatrix& x, const RowMatrix& d1, Eigen::Index j,
                     Eigen::Ref<Eigen::RowVectorXd> row) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double v = x(i, j);
    if (v != 0.0) row += v * d1.row(i);
  }
}

}  // namespace

Gradient BackwardFromTrace(const ModelParams& p, const RowMatrix& x,
                           const ForwardTrace& trace, std::span<const int> labels,
                           std::span<const double> extra_output_grad,
                           std::span<const double> sample_weights) {
  PartialGradient part =
      BackwardExceptW1(p, x, trace, labels, extra_output_grad, sample_weights);
  Gradient& g = part.g;
  g.w1 = RowMatrix::Zero(x.cols(), part.d1.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) AccumulateW1Row(x, part.d1, j, g.w1.row(j));
  return std::move(g);
}

void SgdStepFromTrace(ModelParams& p, const RowMatrix& x, const ForwardTrace& trace,
                      std::span<const int> labels, std::span<const double> extra_output_grad,
                      std::span<const double> sample_weights, double lr) {
  const PartialGradient part =
      BackwardExceptW1(p, x, trace, labels, extra_output_grad, sample_weights);
  const Gradient& g = part.g;
  if (!g.b1.allFinite() || !g.w2.allFinite() || !g.b2.allFinite() || !g.w3.allFinite() ||
      !std::isfinite(g.b3)) {
    throw DivergenceError("SgdStep: non-finite gradient");
  }
  // First-layer rows whose inputs are all zero in this batch have a zero
  // gradient and are left untouched.
  Eigen::RowVectorXd row(p.w1.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    bool touched = false;
    for (Eigen::Index i = 0; i < x.rows() && !touched; ++i) touched = x(i, j) != 0.0;
    if (!touched) continue;
    row.setZero();
    AccumulateW1Row(x, part.d1, j, row);
    if (!row.allFinite()) throw DivergenceError("SgdStep: non-finite gradient");
    p.w1.row(j) -= lr * row;
  }
  p.b1 -= lr * g.b1;
  p.w2 -= lr * g.w2;
  p.b2 -= lr * g.b2;
  p.w3 -= lr * g.w3;
  p.b3 -= lr * g.b3;
}

Gradient Backward(const ModelParams& p, const RowMatrix& x,
                  std::span<const int> labels,
                  std::span<const double> extra_output_grad,
                  std::span<const double> sample_weights) {
  return BackwardFromTrace(p, x, Trace(p, x), labels, extra_output_grad,
                           sample_weights);
}

ModelParams SgdStep(const ModelParams& p, const Gradient& g, double lr) {
  if (g.architecture() != p.architecture()) {
    throw InvalidArgument("SgdStep: gradient shape does not match parameters");
  }
  if (!g.AllFinite()) throw DivergenceError("SgdStep: non-finite gradient");
  ModelParams out = p;
  out.w1 -= lr * g.w1;
  out.b1 -= lr * g.b1;
  out.w2 -= lr * g.w2;
  out.b2 -= lr * g.b2;
  out.w3 -= lr * g.w3;
  out.b3 -= lr * g.b3;
  return out;
}

}  // namespace fairattack
