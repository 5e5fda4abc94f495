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

#include "eqcl/problems.h"

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "eqcl/error.h"

using namespace eqcl;

TEST_CASE("synthetic fairness data") {
  const TabularDataset a = SynthFairnessDataset(1, {});
  CHECK(a.size() == 4000);
  CHECK(a.num_features() == 7);
  CHECK(a.group_names.size() == 2);
  CHECK(SynthFairnessDataset(1, {}) == a);
  CHECK_FALSE(SynthFairnessDataset(2, {}) == a);

  // Group shares and base rates follow the spec.
  std::vector<double> count(2, 0.0), pos(2, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto g = static_cast<std::size_t>(a.groups[i]);
    count[g] += 1.0;
    pos[g] += a.labels[i];
  }
  CHECK(count[0] / 4000.0 == doctest::Approx(0.85).epsilon(0.03));
  CHECK(pos[0] / count[0] == doctest::Approx(0.7).epsilon(0.05));
  CHECK(pos[1] / count[1] == doctest::Approx(0.3).epsilon(0.15));

  SynthFairnessSpec one;
  one.groups = {{1.0, 0.5}};
  CHECK_THROWS_AS(SynthFairnessDataset(0, one), ValidationError);
  SynthFairnessSpec bad;
  bad.groups = {{0.5, 0.5}, {0.5, 1.0}};
  CHECK_THROWS_AS(SynthFairnessDataset(0, bad), ValidationError);
}

TEST_CASE("equal base rates give near-zero label disparity") {
  SynthFairnessSpec s;
  s.n = 20000;
  s.groups = {{0.5, 0.6}, {0.5, 0.6}};
  const TabularDataset d = SynthFairnessDataset(3, s);
  std::vector<double> count(2, 0.0), pos(2, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto g = static_cast<std::size_t>(d.groups[i]);
    count[g] += 1.0;
    pos[g] += d.labels[i];
  }
  CHECK(std::abs(pos[0] / count[0] - pos[1] / count[1]) < 0.03);
}

TEST_CASE("fairness problem construction") {
  SynthFairnessSpec three;
  three.n = 600;
  three.groups = {{0.4, 0.6}, {0.3, 0.5}, {0.3, 0.4}};
  const TabularDataset d = SynthFairnessDataset(0, three);
  const Problem dp = BuildFairnessProblem(d, {});
  CHECK(dp.num_equalities() == 3);
  CHECK(dp.num_inequalities() == 0);
  FairnessOptions ds;
  ds.mode = FairnessMode::kDoubleSided;
  ds.eps = 1e-4;
  const Problem two = BuildFairnessProblem(d, ds);
  CHECK(two.num_inequalities() == 6);
  CHECK(two.num_equalities() == 0);
  CHECK(ParseFairnessMode("prescribed") == FairnessMode::kPrescribed);
  CHECK(std::string(FairnessModeName(FairnessMode::kExactDp)) == "exact_dp");
  CHECK_THROWS_AS(ParseFairnessMode("fair-ish"), ValidationError);

  // Prescribed r = 0.5 at f = 0.5 gives zero slack: zero weights and bias.
  FairnessOptions pr;
  pr.mode = FairnessMode::kPrescribed;
  const Problem p = BuildFairnessProblem(d, pr);
  Model m(p.model);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  const auto streams = p.sampler(0, 1);
  for (const auto& c : p.constraints) {
    CHECK(Evaluate(EvalSlack(c, m, streams->at(c.stream)), m.bindings()).item() == 0.0);
  }
}

TEST_CASE("disparity and hard rates") {
  CHECK(Disparity(std::vector<double>{0.4, 0.6, 0.5}) == doctest::Approx(0.2));
  CHECK(Disparity(std::vector<double>{0.3}) == 0.0);
  CHECK_THROWS_AS(Disparity(std::vector<double>{}), ValidationError);
  // Invariant under relabeling.
  CHECK(Disparity(std::vector<double>{0.5, 0.4, 0.6}) == doctest::Approx(0.2));

  const TabularDataset d = SynthFairnessDataset(0, {.n = 500});
  Model constant({ModelKind::kLogistic, d.num_features(), 1});
  std::vector<double> theta(constant.num_params(), 0.0);
  theta.back() = 3.0;
  constant.set_params(theta);
  const auto rates = HardGroupRates(constant, d);
  CHECK(rates == std::vector<double>{1.0, 1.0});
  CHECK(Disparity(rates) == 0.0);
  double base = 0.0;
  for (double y : d.labels) base += y;
  CHECK(Accuracy(constant, d) == doctest::Approx(base / 500.0));
}

TEST_CASE("collocation sampling") {
  const CollocationSet s = SampleCollocation(1000, 50, 60, 7);
  CHECK(s.interior.rows() == 1000);
  CHECK(s.boundary.rows() == 50);
  CHECK(s.initial.rows() == 60);
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(s.interior.at(i, 0) >= 0.0);
    CHECK(s.interior.at(i, 0) <= 2 * std::numbers::pi);
    CHECK(s.interior.at(i, 1) >= 0.0);
    CHECK(s.interior.at(i, 1) <= 1.0);
  }
  CHECK_THROWS_AS(SampleCollocation(0, 1, 1, 0), ValidationError);
  CHECK(SampleCollocation(10, 10, 10, 7).interior.values() ==
        SampleCollocation(10, 10, 10, 7).interior.values());

  const Sampler fixed = CollocationSampler(20, 5, 5, false);
  CHECK(fixed(3, 1).get() == fixed(3, 9).get());
  const Sampler dynamic = CollocationSampler(20, 5, 5, true);
  CHECK(dynamic(3, 1)->at("pde").features.values() !=
        dynamic(3, 2)->at("pde").features.values());
  CHECK(dynamic(3, 2)->at("pde").features.values() ==
        dynamic(3, 2)->at("pde").features.values());
}

TEST_CASE("convection problem and truth") {
  ConvectionOptions o;
  o.model = {ModelKind::kMlp, 2, 1, {8}};
  const Problem p = BuildConvectionProblem(o);
  CHECK(p.num_equalities() == 3);
  CHECK(p.objective.l2_weight == 0.0);
  o.model = {ModelKind::kMlp, 3, 1, {8}};
  CHECK_THROWS_AS(BuildConvectionProblem(o), ValidationError);

  for (double t : {0.0, 0.3, 1.0}) {
    CHECK(ConvectionTruth(0.0, t, 2.0) ==
          doctest::Approx(ConvectionTruth(2 * std::numbers::pi, t, 2.0)));
  }
  CHECK(ConvectionTruth(1.2, 0.0, 5.0) == std::sin(1.2));

  // The truth satisfies all three constraints through the constraint module.
  const double beta = 4.0;
  const auto cs = MakePdeConstraints(beta);
  const ForwardFn truth = [beta](const Expr& q) {
    return Sin(SliceCols(q, 0, 1) - beta * SliceCols(q, 1, 2));
  };
  const auto streams = CollocationSampler(300, 100, 100, false)(1, 1);
  for (const auto& c : cs) {
    CHECK(Evaluate(EvalSlack(c, truth, streams->at(c.stream)), Bindings{}).item() <= 1e-10);
  }
}

TEST_CASE("evaluation grid and relative L2") {
  const Tensor g = EvaluationGrid(4, 3);
  CHECK(g.rows() == 12);
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(2, 1) == 1.0);
  CHECK(g.at(11, 0) == doctest::Approx(2 * std::numbers::pi));
  CHECK_THROWS_AS(EvaluationGrid(1, 3), ValidationError);

  const std::vector<double> truth{1.0, -2.0, 0.5};
  CHECK(RelativeL2(truth, truth) == 0.0);
  CHECK(RelativeL2(std::vector<double>(3, 0.0), truth) == 1.0);
  CHECK(RelativeL2(std::vector<double>{1.1, -2.2, 0.55}, truth) == doctest::Approx(0.1));
  CHECK_THROWS_AS(RelativeL2(truth, std::vector<double>(3, 0.0)), ValidationError);
  CHECK_THROWS_AS(RelativeL2(truth, std::vector<double>(2, 1.0)), ValidationError);

  // A zero network has relative error one.
  Model zero({ModelKind::kMlp, 2, 1, {4}});
  zero.set_params(std::vector<double>(zero.num_params(), 0.0));
  CHECK(ConvectionError(zero, 1.0, 16, 8) == doctest::Approx(1.0));
}

TEST_CASE("classwise data and problem") {
  ClasswiseSpec s;
  s.per_class = 20;
  s.dim = 10;
  const TabularDataset d = SynthClasswiseDataset(0, s);
  CHECK(d.size() == 60);
  CHECK(d.num_features() == 10);
  CHECK(SynthClasswiseDataset(0, s) == d);
  const Problem p = BuildClasswiseProblem(d, 0.0);
  CHECK(p.num_equalities() == 3);
  CHECK(p.model.output_size == 3);

  // alpha = 0: objective identically zero.
  Model m = InitParams(p.model, 1);
  const auto streams = p.sampler(0, 1);
  const Expr l = EmpiricalLagrangian(m, p.objective, {}, DualState{}, *streams);
  CHECK(Evaluate(l, m.bindings()).item() == 0.0);

  TabularDataset single = d;
  single.labels.assign(d.size(), 0.0);
  CHECK_THROWS_AS(BuildClasswiseProblem(single, 0.0), ValidationError);
  ClasswiseSpec bad = s;
  bad.noise = {0.0, 1.5};
  CHECK_THROWS_AS(SynthClasswiseDataset(0, bad), ValidationError);
}

TEST_CASE("interpolating classwise model drives every slack toward zero") {
  ClasswiseSpec s;
  s.per_class = 10;
  s.dim = 3;
  s.noise = {0.0, 0.0, 0.0};
  s.separation = 100.0;
  const TabularDataset d = SynthClasswiseDataset(1, s);
  const Problem p = BuildClasswiseProblem(d, 0.0);
  // Logits = scale * x: the class mean coordinate dominates.
  Model m(p.model);
  std::vector<double> theta(m.num_params(), 0.0);
  for (std::size_t k = 0; k < 3; ++k) theta[k * 3 + k] = 1.0;
  m.set_params(theta);
  const auto streams = p.sampler(0, 1);
  for (const auto& c : p.constraints) {
    CHECK(Evaluate(EvalSlack(c, m, streams->at(c.stream)), m.bindings()).item() < 1e-12);
  }
}
