// Copyright 2026 The eqcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQCL_CONSTRAINTS_H_
#define EQCL_CONSTRAINTS_H_

#include <functional>
#include <string>
#include <vector>

#include "eqcl/autodiff.h"
#include "eqcl/models.h"
#include "eqcl/tensor.h"

namespace eqcl {

inline constexpr double kDefaultTemperature = 8.0;

// Samples from one stream: features (N x d), optional targets and group ids.
struct Batch {
  Tensor features = Tensor::Zeros({0, 1});
  std::vector<double> targets;
  std::vector<int> groups;

  std::size_t size() const { return features.rank() == 2 ? features.shape()[0] : 0; }
};

// Row indices of `batch` whose group id equals `group`.
std::vector<std::size_t> GroupRows(const Batch& batch, int group);
// Row indices of `batch` whose target equals `label`.
std::vector<std::size_t> LabelRows(const Batch& batch, int label);

// Maps a (batch x d) expression to model outputs. Usually Model::Forward,
// but analytic functions can stand in for tests and reference solutions.
using ForwardFn = std::function<Expr(const Expr&)>;
ForwardFn ForwardOf(const Model& model);

// Builds a scalar empirical mean (a slack or an objective) from a forward map
// and a batch.
using LossBuilder = std::function<Expr(const ForwardFn&, const Batch&)>;

enum class ConstraintKind { kEquality, kInequality };

// E[loss] <= 0 or E[loss] = 0 over the samples of `stream`.
struct ExpectationConstraint {
  ConstraintKind kind = ConstraintKind::kEquality;
  std::string label;
  std::string stream;
  LossBuilder slack;
};

// Top-line objective: E[l(f(x), y)] over `stream` (when `loss` is set) plus
// (l2_weight / 2) ||theta||^2.
struct Objective {
  std::string stream;
  LossBuilder loss;
  double l2_weight = 0.0;
};

// Empirical slack as a differentiable scalar. Throws ValidationError on an
// empty batch.
Expr EvalSlack(const ExpectationConstraint& c, const Model& model,
               const Batch& batch);
Expr EvalSlack(const ExpectationConstraint& c, const ForwardFn& forward,
               const Batch& batch);

// Per-sample losses (N x 1) from model outputs and the batch.
using SampleLoss = std::function<Expr(const Expr& outputs, const Batch& batch)>;

// Constraint whose slack is the batch mean of `loss`.
ExpectationConstraint MakeMeanLossConstraint(ConstraintKind kind, std::string label,
                                             std::string stream, SampleLoss loss);

// Binary cross-entropy of probabilities against 0/1 targets.
Expr BinaryCrossEntropy(const Expr& probs, const Batch& batch);
// Softmax cross-entropy of (N x K) logits against integer targets.
// Computed as log(sum_j exp(z_j - z_y)), which is >= 0 exactly.
Expr SoftmaxCrossEntropy(const Expr& logits, const Batch& batch);

// Mean over `rows` (all rows when empty) of sigmoid(alpha (f(x) - 0.5)).
Expr SmoothRate(const ForwardFn& forward, const Batch& batch,
                const std::vector<bool>& group_mask, double alpha);
Expr SmoothRate(const Model& model, const Batch& batch,
                const std::vector<bool>& group_mask, double alpha);

// Demographic parity: smooth rate of `group` minus the overall smooth rate.
// `population` is the full dataset, used to reject empty groups up front.
ExpectationConstraint MakeDpConstraint(const Batch& population, int group,
                                       double alpha = kDefaultTemperature,
                                       std::string stream = "population");

// Prescribed rate: smooth rate of `group` minus r, with r in (0, 1).
ExpectationConstraint MakePrescribedRateConstraint(
    const Batch& population, int group, double rate,
    double alpha = kDefaultTemperature, std::string stream = "population");

// E[loss | y = k] = 0, estimated over the rows of the batch labelled k.
ExpectationConstraint MakeClasswiseConstraint(const Batch& population, int k,
                                              SampleLoss loss,
                                              std::string stream = "train");

struct PdeDomain {
  double x_min = 0.0;
  double x_max = 6.283185307179586;
  double t_min = 0.0;
  double t_max = 1.0;
};

// Convection problem constraints on streams "pde" (N x 2 points (x, t)),
// "bc" (N x 1 times) and "ic" (N x 1 positions):
//   E[(df/dt + beta df/dx)^2] = 0
//   E[(f(x_min, t) - f(x_max, t))^2] = 0
//   E[(f(x, 0) - sin x)^2] = 0
std::vector<ExpectationConstraint> MakePdeConstraints(double beta,
                                                      const PdeDomain& domain = {});

}  // namespace eqcl

#endif  // EQCL_CONSTRAINTS_H_
