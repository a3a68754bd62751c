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

#ifndef FAIRATTACK_MODEL_H_
#define FAIRATTACK_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "fairattack/data.h"

namespace fairattack {

// Three dense layers: input -> hidden1 -> hidden2 -> 1, ReLU after each
// hidden layer and a sigmoid on the output.
struct Architecture {
  int input_dim = 0;
  int hidden1 = 64;
  int hidden2 = 32;

  // Number of scalar parameters.
  std::size_t ParameterCount() const;
  bool operator==(const Architecture&) const = default;
};

// Storage shared by ModelParams and Gradient. Weight matrices are stored
// row-major as (fan_in x fan_out).
//
// Flat-vector order, consumed by the aggregation rules:
//   w1 row-major, b1, w2 row-major, b2, w3, b3.
struct DenseStack {
  RowMatrix w1;
  Eigen::VectorXd b1;
  RowMatrix w2;
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;
  double b3 = 0.0;

  Architecture architecture() const;
  std::size_t size() const;
  bool AllFinite() const;
  Eigen::VectorXd Flatten() const;
  // Throws InvalidArgument when `flat` has the wrong length.
  void AssignFlat(const Eigen::VectorXd& flat);
  bool operator==(const DenseStack& other) const;
};

struct ModelParams : DenseStack {
  static ModelParams Zeros(const Architecture& arch);
  // Every weight and bias drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static ModelParams Init(const Architecture& arch, std::uint64_t seed);
  static ModelParams Unflatten(const Architecture& arch, const Eigen::VectorXd& flat);
};

struct Gradient : DenseStack {
  static Gradient Zeros(const Architecture& arch);
};

// Intermediate activations of one forward pass, reused by the backward pass.
struct ForwardTrace {
  RowMatrix h1;  // post-ReLU
  RowMatrix h2;  // post-ReLU
  Eigen::VectorXd probs;
};

ForwardTrace Trace(const ModelParams& p, const RowMatrix& x);

// Per-row probability of the positive class.
Eigen::VectorXd Forward(const ModelParams& p, const RowMatrix& x);

// Mean binary cross-entropy, with probabilities clamped to
// [1e-7, 1 - 1e-7]. With `weights`, each term is scaled by its weight before
// averaging over the sample count.
double BceLoss(std::span<const double> probs, std::span<const int> labels,
               std::span<const double> weights = {});

// Gradient of  mean_i(w_i * bce_i) + sum_i extra_output_grad_i * prob_i.
// `extra_output_grad` is the hook through which an additional objective on
// the output probabilities enters; `sample_weights` defaults to all ones.
Gradient Backward(const ModelParams& p, const RowMatrix& x,
                  std::span<const int> labels,
                  std::span<const double> extra_output_grad = {},
                  std::span<const double> sample_weights = {});

// Same as Backward() but reuses activations from Trace().
Gradient BackwardFromTrace(const ModelParams& p, const RowMatrix& x,
                           const ForwardTrace& trace, std::span<const int> labels,
                           std::span<const double> extra_output_grad = {},
                           std::span<const double> sample_weights = {});

// In-place p -= lr * BackwardFromTrace(...), bit-identical to
// SgdStep(p, BackwardFromTrace(...), lr) but without materializing the
// first-layer gradient rows that sparse inputs leave at zero.
void SgdStepFromTrace(ModelParams& p, const RowMatrix& x, const ForwardTrace& trace,
                      std::span<const int> labels, std::span<const double> extra_output_grad,
                      std::span<const double> sample_weights, double lr);

// p - lr * g. Throws DivergenceError if g is not finite.
ModelParams SgdStep(const ModelParams& p, const Gradient& g, double lr);

}  // namespace fairattack

#endif  // FAIRATTACK_MODEL_H_
