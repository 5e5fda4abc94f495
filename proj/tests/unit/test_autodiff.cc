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

#include "eqcl/autodiff.h"

#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "eqcl/error.h"
#include "eqcl/models.h"
#include "oracles.h"

using namespace eqcl;

namespace {

Tensor RandomTensor(std::mt19937_64& rng, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::Zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

// Flattened parameter values of `params` in `b`.
std::vector<double> Flatten(const Bindings& b, const std::vector<Expr>& params) {
  std::vector<double> out;
  for (const auto& p : params) {
    const Tensor* t = b.Find(p.leaf_id());
    out.insert(out.end(), t->data().begin(), t->data().end());
  }
  return out;
}

Bindings Unflatten(Bindings b, const std::vector<Expr>& params,
                   const std::vector<double>& flat) {
  std::size_t k = 0;
  for (const auto& p : params) {
    Tensor* t = b.FindMutable(p.leaf_id());
    for (double& v : t->mutable_data()) v = flat[k++];
  }
  return b;
}

// Independent check: library gradient against the test's own central
// differences over Evaluate.
double GradientError(const Expr& e, const Bindings& b, double h = 1e-5) {
  const std::vector<Expr> params = ParameterLeaves(e);
  const std::vector<double> ad = GradParams(e, b, params);
  const auto f = [&](const std::vector<double>& x) {
    return Evaluate(e, Unflatten(b, params, x)).item();
  };
  const std::vector<double> fd = testing::CentralGradient(f, Flatten(b, params), h);
  return testing::MaxRelError(ad, fd);
}

}  // namespace

TEST_CASE("evaluate: spec examples") {
  const Expr x = Input("x", Shape{});
  Bindings b;
  b.Bind(x, Tensor::Scalar(3.0));
  CHECK(Evaluate(2.0 * x, b).item() == 6.0);
  CHECK(Evaluate(Sigmoid(Constant(0.0)), b).item() == 0.5);
  CHECK(Evaluate(Tanh(Constant(0.0)), b).item() == 0.0);
}

TEST_CASE("evaluate: errors") {
  const Expr x = Input("x", Shape{2});
  CHECK_THROWS_AS(Evaluate(x + 1.0, Bindings{}), BindingError);
  Bindings b;
  CHECK_THROWS_AS(b.Bind(x, Tensor::Zeros({3})), ShapeError);
  CHECK_THROWS_AS(MatMul(Constant(Tensor::Zeros({2, 3})), Constant(Tensor::Zeros({2, 3}))),
                  ShapeError);
  CHECK_THROWS_AS(Constant(Tensor::Zeros({2, 3})) + Constant(Tensor::Zeros({3, 2})),
                  ShapeError);
}

TEST_CASE("grad_params: spec examples") {
  const Expr t = Parameter("theta", Shape{});
  Bindings b;
  b.Bind(t, Tensor::Scalar(3.0));
  CHECK(GradParams(Square(t), b) == std::vector<double>{6.0});

  const Expr v = Parameter("v", Shape{2});
  Bindings bv;
  bv.Bind(v, Tensor({2}, {1.0, 2.0}));
  const std::vector<double> g = GradParams(0.5 * Sum(v * v), bv);
  CHECK(g == std::vector<double>{1.0, 2.0});

  CHECK_THROWS_AS(GradParams(v * 2.0, bv), ShapeError);
}

TEST_CASE("grad_params: tanh MLP loss matches finite differences") {
  std::mt19937_64 rng(7);
  Model m = InitParams({ModelKind::kMlp, 3, 2, {5, 4}}, 11);
  const Tensor x = RandomTensor(rng, {6, 3}, -1.0, 1.0);
  const Expr loss = Mean(Square(m.Forward(Constant(x)) - 0.3));
  CHECK(GradientError(loss, m.bindings()) < 1e-5);
}

TEST_CASE("every primitive agrees with central differences at 10 random points") {
  std::mt19937_64 rng(2024);
  const Expr p = Parameter("p", Shape{2, 3});
  const Expr q = Parameter("q", Shape{3, 2});
  const Expr r = Parameter("r", Shape{2, 3});
  const Expr s = Parameter("s", Shape{3});
  std::vector<std::pair<const char*, Expr>> cases = {
      {"add", Sum(p + r)},
      {"sub", Sum(Square(p - r))},
      {"mul", Sum(p * r)},
      {"div", Sum(p / r)},
      {"matmul", Sum(Square(MatMul(p, q)))},
      {"sum_axis0", Sum(Square(Sum(p, 0)))},
      {"sum_axis1", Sum(Square(Sum(p, 1)))},
      {"mean", Square(Mean(p * r))},
      {"mean_axis", Sum(Square(Mean(p, 0) - Mean(r, 1) * 0.5 + 0.1 * s))},
      {"square", Sum(Square(p))},
      {"sqrt", Sum(Sqrt(p))},
      {"exp", Sum(Exp(p))},
      {"log", Sum(Log(p))},
      {"sin", Sum(Sin(p))},
      {"cos", Sum(Cos(p))},
      {"tanh", Sum(Tanh(p))},
      {"sigmoid", Sum(Sigmoid(p))},
      {"max_const", Sum(Square(MaxWith(p, 1.25)))},
      {"gather", Sum(Square(GatherRows(p, {1, 0, 1})))},
      {"slice", Sum(Square(SliceCols(p, 1, 3)))},
      {"broadcast_row", Sum(Square(p + s))},
      {"neg_scalar", -Sum(p) * Mean(r)},
  };
  for (const auto& [name, e] : cases) {
    for (int trial = 0; trial < 10; ++trial) {
      Bindings b;
      // Positive domain keeps sqrt/log/div smooth.
      b.Bind(p, RandomTensor(rng, {2, 3}, 0.5, 2.0));
      b.Bind(q, RandomTensor(rng, {3, 2}, -1.0, 1.0));
      b.Bind(r, RandomTensor(rng, {2, 3}, 0.5, 2.0));
      b.Bind(s, RandomTensor(rng, {3}, -1.0, 1.0));
      INFO(name << " trial " << trial);
      CHECK(GradientError(e, b) < 1e-5);
    }
  }
}

TEST_CASE("max-with-constant has zero subgradient at the kink") {
  const Expr p = Parameter("p", Shape{});
  Bindings b;
  b.Bind(p, Tensor::Scalar(1.0));
  CHECK(GradParams(MaxWith(p, 1.0), b) == std::vector<double>{0.0});
  b.Bind(p, Tensor::Scalar(2.0));
  CHECK(GradParams(MaxWith(p, 1.0), b) == std::vector<double>{1.0});
}

TEST_CASE("input_derivative: spec examples") {
  const Expr x = Input("x", Shape{});
  Bindings b;
  b.Bind(x, Tensor::Scalar(0.0));
  CHECK(InputDerivative(Sin(x), x, Tensor::Scalar(1.0), b).item() == doctest::Approx(1.0));
  b.Bind(x, Tensor::Scalar(3.0));
  CHECK(InputDerivative(Square(x), x, Tensor::Scalar(1.0), b).item() == doctest::Approx(6.0));

  const Expr p = Parameter("p", Shape{});
  CHECK_THROWS_AS(Tangent(Square(p), p, Tensor::Scalar(1.0)), ValidationError);
  CHECK_THROWS_AS(Tangent(Square(x), x, Tensor::Zeros({2})), ShapeError);
}

TEST_CASE("input_derivative: MLP matches finite differences on inputs") {
  std::mt19937_64 rng(5);
  const Model m = InitParams({ModelKind::kMlp, 2, 1, {8, 8}}, 3);
  const Tensor x0 = RandomTensor(rng, {4, 2}, 0.0, 1.0);
  const Tensor dir = RandomTensor(rng, {4, 2}, -1.0, 1.0);
  const Expr x = Input("x", x0);
  const Expr f = m.Forward(x);
  const Tensor ad = InputDerivative(f, x, dir, m.bindings());
  const double h = 1e-5;
  auto at = [&](double s) {
    Tensor xs = x0;
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] += s * dir[i];
    Bindings b = m.bindings();
    b.Bind(x, xs);
    return Evaluate(f, b);
  };
  const Tensor up = at(h), down = at(-h);
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double fd = (up[i] - down[i]) / (2 * h);
    CHECK(std::abs(ad[i] - fd) / (std::abs(ad[i]) + 1e-12) < 1e-5);
  }
}

TEST_CASE("input_derivative is linear in the direction") {
  std::mt19937_64 rng(9);
  const Model m = InitParams({ModelKind::kMlp, 2, 1, {6}}, 1);
  const Expr x = Input("x", RandomTensor(rng, {5, 2}, -1.0, 1.0));
  const Expr f = Sin(m.Forward(x)) * Exp(SliceCols(x, 0, 1));
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor v = RandomTensor(rng, {5, 2}, -1.0, 1.0);
    const double alpha = std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
    Tensor av = v;
    for (double& e : av.mutable_data()) e *= alpha;
    const Tensor d1 = InputDerivative(f, x, v, m.bindings());
    const Tensor d2 = InputDerivative(f, x, av, m.bindings());
    for (std::size_t i = 0; i < d1.size(); ++i) {
      CHECK(std::abs(d2[i] - alpha * d1[i]) <= 1e-12 * (1.0 + std::abs(d2[i])));
    }
  }
}

TEST_CASE("tangent of an expression that ignores the input is zero") {
  const Expr x = Input("x", Tensor::Zeros({3, 2}));
  const Expr c = Constant(Tensor::Full({3, 1}, 2.0));
  const Tensor d = InputDerivative(c, x, Tensor::Full({3, 2}, 1.0), Bindings{});
  for (double v : d.data()) CHECK(v == 0.0);
}

TEST_CASE("gradient of an input-derivative composition matches finite differences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Model m = InitParams({ModelKind::kMlp, 2, 1, {6, 6}}, 100 + trial);
    const Expr x = Input("x", RandomTensor(rng, {8, 2}, 0.0, 1.0));
    const Expr f = m.Forward(x);
    const Expr residual = Tangent(f, x, Tensor::Full({8, 2}, 1.0));
    const Expr loss = Mean(Square(residual));
    INFO("trial " << trial);
    CHECK(GradientError(loss, m.bindings()) < 1e-4);
  }
}

TEST_CASE("finite_diff_check: spec examples") {
  std::mt19937_64 rng(3);
  const Expr p = Parameter("p", Shape{4});
  Bindings b;
  b.Bind(p, RandomTensor(rng, {4}, -1.0, 1.0));
  CHECK(FiniteDiffCheck(Sum(3.0 * p + 1.0), b, 1e-5) < 1e-10);
  CHECK(FiniteDiffCheck(Sum(Square(p)), b, 1e-5) < 1e-8);
  const Model m = InitParams({ModelKind::kMlp, 3, 1, {7}}, 4);
  const Expr mlp = Mean(Square(m.Forward(Constant(RandomTensor(rng, {5, 3}, -1, 1)))));
  CHECK(FiniteDiffCheck(mlp, m.bindings(), 1e-5) < 1e-5);
  CHECK_THROWS_AS(FiniteDiffCheck(Sum(p), b, 0.0), ValidationError);
}

TEST_CASE("finite_diff_check reports non-finite gradients as infinite error") {
  const Expr p = Parameter("p", Shape{});
  Bindings b;
  b.Bind(p, Tensor::Scalar(0.0));
  CHECK(std::isinf(FiniteDiffCheck(Sqrt(p), b, 1e-5)));
}

TEST_CASE("evaluation is referentially transparent") {
  std::mt19937_64 rng(21);
  const Model m = InitParams({ModelKind::kMlp, 3, 2, {9, 9}}, 8);
  const Expr e = Mean(Tanh(m.Forward(Constant(RandomTensor(rng, {10, 3}, -2, 2)))));
  const Bindings b = m.bindings();
  CHECK(Evaluate(e, b) == Evaluate(e, b));
  CHECK(GradParams(e, b) == GradParams(e, b));
}
