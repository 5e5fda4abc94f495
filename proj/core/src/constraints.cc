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

#include "eqcl/constraints.h"

#include <cmath>
#include <utility>

#include "eqcl/error.h"

namespace eqcl {
namespace {

std::vector<std::size_t> MaskRows(const std::vector<bool>& mask, std::size_t n) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n && i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  return rows;
}

Expr SmoothScores(const ForwardFn& forward, const Batch& batch, double alpha) {
  const Expr f = forward(Constant(batch.features));
  return Sigmoid(alpha * (f - 0.5));
}

Expr MeanOfRows(const Expr& values, const std::vector<std::size_t>& rows,
                std::size_t n) {
  if (rows.size() == n) return Mean(values);
  return Mean(GatherRows(values, rows));
}

void RequireGroup(const Batch& population, int group) {
  if (GroupRows(population, group).empty()) {
    throw ValidationError("group " + std::to_string(group) +
                          " has no members in the dataset");
  }
}

}  // namespace

std::vector<std::size_t> GroupRows(const Batch& batch, int group) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < batch.groups.size(); ++i) {
    if (batch.groups[i] == group) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> LabelRows(const Batch& batch, int label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < batch.targets.size(); ++i) {
    if (static_cast<int>(batch.targets[i]) == label) rows.push_back(i);
  }
  return rows;
}

ForwardFn ForwardOf(const Model& model) {
  return [&model](const Expr& x) { return model.Forward(x); };
}

Expr EvalSlack(const ExpectationConstraint& c, const ForwardFn& forward,
               const Batch& batch) {
  if (batch.size() == 0) {
    throw ValidationError("empty batch for constraint '" + c.label + "'");
  }
  Expr s = c.slack(forward, batch);
  if (NumElements(s.shape()) != 1) {
    throw ShapeError("slack of '" + c.label + "' is not scalar");
  }
  return s;
}

Expr EvalSlack(const ExpectationConstraint& c, const Model& model,
               const Batch& batch) {
  return EvalSlack(c, ForwardOf(model), batch);
}

ExpectationConstraint MakeMeanLossConstraint(ConstraintKind kind, std::string label,
                                             std::string stream, SampleLoss loss) {
  return {kind, std::move(label), std::move(stream),
          [loss = std::move(loss)](const ForwardFn& forward, const Batch& batch) {
            return Mean(loss(forward(Constant(batch.features)), batch));
          }};
}

Expr BinaryCrossEntropy(const Expr& probs, const Batch& batch) {
  if (batch.targets.size() != batch.size()) {
    throw ValidationError("cross-entropy needs one target per sample");
  }
  const Expr y = Constant(Tensor::Column(batch.targets));
  const Expr log_p = Log(MaxWith(probs, 1e-15));
  const Expr log_q = Log(MaxWith(1.0 - probs, 1e-15));
  return -(y * log_p + (1.0 - y) * log_q);
}

Expr SoftmaxCrossEntropy(const Expr& logits, const Batch& batch) {
  const std::size_t n = batch.size();
  const std::size_t k = logits.shape()[1];
  if (batch.targets.size() != n) {
    throw ValidationError("cross-entropy needs one target per sample");
  }
  Tensor onehot = Tensor::Zeros({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::size_t>(batch.targets[i]);
    if (label >= k) throw ValidationError("label outside the logit range");
    onehot.at(i, label) = 1.0;
  }
  const Expr target_logit = Sum(logits * Constant(std::move(onehot)), 1);
  return Log(Sum(Exp(logits - target_logit), 1));
}

Expr SmoothRate(const ForwardFn& forward, const Batch& batch,
                const std::vector<bool>& group_mask, double alpha) {
  const std::vector<std::size_t> rows = MaskRows(group_mask, batch.size());
  if (rows.empty()) throw ValidationError("empty group in batch");
  return MeanOfRows(SmoothScores(forward, batch, alpha), rows, batch.size());
}

Expr SmoothRate(const Model& model, const Batch& batch,
                const std::vector<bool>& group_mask, double alpha) {
  return SmoothRate(ForwardOf(model), batch, group_mask, alpha);
}

ExpectationConstraint MakeDpConstraint(const Batch& population, int group,
                                       double alpha, std::string stream) {
  RequireGroup(population, group);
  return {ConstraintKind::kEquality, "dp_group" + std::to_string(group),
          std::move(stream),
          [group, alpha](const ForwardFn& forward, const Batch& batch) {
            const std::vector<std::size_t> rows = GroupRows(batch, group);
            if (rows.empty()) {
              throw ValidationError("group " + std::to_string(group) +
                                    " is empty in this batch");
            }
            const Expr s = SmoothScores(forward, batch, alpha);
            return MeanOfRows(s, rows, batch.size()) - Mean(s);
          }};
}

ExpectationConstraint MakePrescribedRateConstraint(const Batch& population,
                                                   int group, double rate,
                                                   double alpha,
                                                   std::string stream) {
  if (!(rate > 0.0 && rate < 1.0)) {
    throw ValidationError("prescribed rate must lie in (0, 1)");
  }
  RequireGroup(population, group);
  return {ConstraintKind::kEquality, "rate_group" + std::to_string(group),
          std::move(stream),
          [group, rate, alpha](const ForwardFn& forward, const Batch& batch) {
            const std::vector<std::size_t> rows = GroupRows(batch, group);
            if (rows.empty()) {
              throw ValidationError("group " + std::to_string(group) +
                                    " is empty in this batch");
            }
            const Expr s = SmoothScores(forward, batch, alpha);
            return MeanOfRows(s, rows, batch.size()) - rate;
          }};
}

ExpectationConstraint MakeClasswiseConstraint(const Batch& population, int k,
                                              SampleLoss loss, std::string stream) {
  if (LabelRows(population, k).empty()) {
    throw ValidationError("class " + std::to_string(k) + " is absent");
  }
  return {ConstraintKind::kEquality, "class" + std::to_string(k), std::move(stream),
          [k, loss = std::move(loss)](const ForwardFn& forward, const Batch& batch) {
            const std::vector<std::size_t> rows = LabelRows(batch, k);
            if (rows.empty()) {
              throw ValidationError("class " + std::to_string(k) +
                                    " is empty in this batch");
            }
            Batch sub;
            std::vector<double> feats;
            const std::size_t d = batch.features.cols();
            for (std::size_t r : rows) {
              auto row = batch.features.data().subspan(r * d, d);
              feats.insert(feats.end(), row.begin(), row.end());
              sub.targets.push_back(batch.targets[r]);
            }
            sub.features = Tensor::Matrix(rows.size(), d, std::move(feats));
            return Mean(loss(forward(Constant(sub.features)), sub));
          }};
}

std::vector<ExpectationConstraint> MakePdeConstraints(double beta,
                                                      const PdeDomain& domain) {
  if (!std::isfinite(beta)) throw ValidationError("convection speed must be finite");
  std::vector<ExpectationConstraint> out;
  out.push_back({ConstraintKind::kEquality, "pde", "pde",
                 [beta](const ForwardFn& forward, const Batch& batch) {
                   if (batch.features.cols() != 2) {
                     throw ShapeError("pde points must be (N, 2) = (x, t)");
                   }
                   const std::size_t n = batch.size();
                   const Expr points = Input("collocation", batch.features);
                   const Expr f = forward(points);
                   Tensor direction = Tensor::Zeros({n, 2});
                   for (std::size_t i = 0; i < n; ++i) {
                     direction.at(i, 0) = beta;
                     direction.at(i, 1) = 1.0;
                   }
                   // df/dt + beta df/dx is the derivative along (beta, 1).
                   const Expr residual = Tangent(f, points, direction);
                   return Mean(Square(residual));
                 }});
  out.push_back({ConstraintKind::kEquality, "bc", "bc",
                 [domain](const ForwardFn& forward, const Batch& batch) {
                   const std::size_t n = batch.size();
                   Tensor left = Tensor::Zeros({n, 2}), right = Tensor::Zeros({n, 2});
                   for (std::size_t i = 0; i < n; ++i) {
                     const double t = batch.features.at(i, 0);
                     left.at(i, 0) = domain.x_min;
                     right.at(i, 0) = domain.x_max;
                     left.at(i, 1) = t;
                     right.at(i, 1) = t;
                   }
                   return Mean(Square(forward(Constant(std::move(left))) -
                                      forward(Constant(std::move(right)))));
                 }});
  out.push_back({ConstraintKind::kEquality, "ic", "ic",
                 [domain](const ForwardFn& forward, const Batch& batch) {
                   const std::size_t n = batch.size();
                   Tensor points = Tensor::Zeros({n, 2});
                   std::vector<double> target(n);
                   for (std::size_t i = 0; i < n; ++i) {
                     const double x = batch.features.at(i, 0);
                     points.at(i, 0) = x;
                     points.at(i, 1) = domain.t_min;
                     target[i] = std::sin(x);
                   }
                   return Mean(Square(forward(Constant(std::move(points))) -
                                      Constant(Tensor::Column(target))));
                 }});
  return out;
}

}  // namespace eqcl
