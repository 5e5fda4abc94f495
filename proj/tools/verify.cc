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


#include "verify.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "eqcl/error.h"
#include "eqcl/problems.h"
#include "eqcl/qp_oracle.h"

namespace eqcl::cli {
namespace {

struct Row {
  std::string name;
  double value;
  double limit;
  bool pass;
};

bool PrintTable(const std::string& suite, const std::vector<Row>& rows) {
  std::size_t width = 5;
  for (const Row& r : rows) width = std::max(width, r.name.size());
  std::printf("%-*s  %12s  %10s  %s\n", static_cast<int>(width), "check", "value", "limit",
              "result");
  bool all = true;
  for (const Row& r : rows) {
    std::printf("%-*s  %12.3e  %10.1e  %s\n", static_cast<int>(width), r.name.c_str(),
                r.value, r.limit, r.pass ? "PASS" : "FAIL");
    all = all && r.pass;
  }
  std::printf("%s: %s\n", suite.c_str(), all ? "all checks passed" : "FAILED");
  return all;
}

Eigen::MatrixXd RandomFullRank(std::mt19937_64& rng, int m, int n) {
  std::normal_distribution<double> normal;
  for (;;) {
    Eigen::MatrixXd X(m, n);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) X(r, c) = normal(rng);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
    if (eig.eigenvalues().minCoeff() > 1e-2 * eig.eigenvalues().maxCoeff()) return X;
  }
}

Eigen::VectorXd RandomVec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

double LargestEigen(const Eigen::MatrixXd& X) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(X * X.transpose())
      .eigenvalues()
      .maxCoeff();
}

std::vector<Row> Gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd X = RandomFullRank(rng, 3, 4);
  const Eigen::VectorXd y = RandomVec(rng, 3);
  const TabularDataset fair = SynthFairnessDataset(seed, {.n = 300});
  const TabularDataset cw = SynthClasswiseDataset(seed, {.per_class = 10, .dim = 8});
  ConvectionOptions co;
  co.beta = 2.0;
  co.model = {ModelKind::kMlp, 2, 1, {8, 8}};
  co.n_pde = co.n_bc = co.n_ic = 20;
  co.alpha_reg = 0.5;
  const std::vector<std::pair<std::string, Problem>> problems = {
      {"qp", BuildQpProblem(X, y)},
      {"qp_ineq", BuildQpIneqProblem(X, y, 0.1)},
      {"fairness_dp", BuildFairnessProblem(fair, {})},
      {"fairness_rate", BuildFairnessProblem(fair, {.mode = FairnessMode::kPrescribed})},
      {"classwise", BuildClasswiseProblem(cw, 1.0)},
      {"bvp", BuildConvectionProblem(co)},
  };
  std::vector<Row> rows;
  std::normal_distribution<double> normal;
  for (const auto& [tag, p] : problems) {
    const auto streams = p.sampler(seed, 1);
    std::vector<std::pair<std::string, std::function<Expr(const Model&)>>> exprs;
    exprs.emplace_back(tag + "/objective", [&p, &streams](const Model& m) {
      return EmpiricalLagrangian(m, p.objective, {}, {}, *streams);
    });
    for (const auto& c : p.constraints) {
      exprs.emplace_back(tag + "/" + c.label, [&c, &streams](const Model& m) {
        return EvalSlack(c, m, streams->at(c.stream));
      });
    }
    for (const auto& [name, build] : exprs) {
      double worst = 0.0;
      for (int point = 0; point < 10; ++point) {
        Model m(p.model);
        std::vector<double> theta(m.num_params());
        for (double& v : theta) v = 0.5 * normal(rng);
        m.set_params(theta);
        const double err = FiniteDiffCheck(build(m), m.bindings(), 1e-5);
        worst = std::max(worst, std::isfinite(err) ? err : INFINITY);
      }
      rows.push_back({name, worst, 1e-5, worst < 1e-5});
    }
  }
  return rows;
}

std::vector<Row> Qp(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double eq = 0.0, ineq = 0.0, box = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = size(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = RandomFullRank(rng, m, n);
    const Eigen::VectorXd y = RandomVec(rng, m);
    const double eps = 0.5 * unit(rng) * 0.5 * y.squaredNorm();
    eq = std::max(eq, KktResiduals(X, y, 0.0, SolveEqQp(X, y)).Max());
    ineq = std::max(ineq, KktResiduals(X, y, eps, SolveIneqQp(X, y, eps)).Max());
    box = std::max(box, KktResiduals(X, y, eps, SolveBoxQp(X, y, eps)).Max());
  }
  return {{"equality KKT (20 instances)", eq, 1e-8, eq <= 1e-8},
          {"inequality KKT (20 instances)", ineq, 1e-8, ineq <= 1e-8},
          {"box KKT (20 instances)", box, 1e-8, box <= 1e-8}};
}

std::vector<Row> Perturbation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int holds = 0;
  double worst = -INFINITY;
  for (int i = 0; i < 100; ++i) {
    const int n = size(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = RandomFullRank(rng, m, n);
    const Eigen::VectorXd y = RandomVec(rng, m);
    const PerturbationReport r = PerturbationCheck(X, y, unit(rng));
    holds += r.holds ? 1 : 0;
    // Largest violation of either side of the sandwich (negative = inside).
    worst = std::max({worst, r.lower - r.gap, r.gap - r.upper});
  }
  return {{"sandwich holds (of 100)", static_cast<double>(holds), 100.0, holds == 100},
          {"max sandwich violation", worst, 1e-9, worst <= 1e-9}};
}

double EquivalenceGap(const Problem& eq, SolverConfig c) {
  const RunResult a = RunPrimalDual(eq, c);
  const double start = 10.0 * c.eta * MaxAbsLoss(a.trajectory) * c.t_max;
  const std::size_t j = eq.num_equalities();
  c.eta /= 2.0;
  c.initial_duals = DualState{std::vector<double>(2 * j, start), {}};
  const RunResult d = RunPrimalDual(ToDoubleSided(eq, 0.0), c);
  double worst = 0.0;
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    const auto& l = d.trajectory.steps.at(t).lambda;
    for (std::size_t k = 0; k < j; ++k) {
      const double mu = l[2 * k] - l[2 * k + 1];
      worst = std::max(worst, std::abs(mu - a.trajectory.steps[t].mu[k]));
    }
  }
  return worst;
}

std::vector<Row> Equivalence(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd X = RandomFullRank(rng, 3, 5);
  const Eigen::VectorXd y = RandomVec(rng, 3);
  SolverConfig qc;
  qc.oracle = OracleKind::kExactQp;
  qc.eta = 0.5 / LargestEigen(X);
  qc.t_max = 1000;
  const double qp = EquivalenceGap(BuildQpProblem(X, y), qc);
  SolverConfig fc;
  fc.lr = 0.2;
  fc.eta = 0.05;
  fc.t_max = 1000;
  const double fair = EquivalenceGap(BuildFairnessProblem(SynthFairnessDataset(seed, {}), {}), fc);
  return {{"qp dual gap (1000 steps)", qp, 1e-10, qp <= 1e-10},
          {"fairness dual gap (1000 steps)", fair, 1e-10, fair <= 1e-10}};
}

}  // namespace

bool RunVerifySuite(const std::string& suite, std::uint64_t seed) {
  std::vector<Row> rows;
  if (suite == "gradients") {
    rows = Gradients(seed);
  } else if (suite == "qp") {
    rows = Qp(seed);
  } else if (suite == "perturbation") {
    rows = Perturbation(seed);
  } else if (suite == "equivalence") {
    rows = Equivalence(seed);
  } else {
    throw ValidationError("unknown suite '" + suite +
                          "' (expected gradients, qp, perturbation or equivalence)");
  }
  return PrintTable(suite, rows);
}

}  // namespace eqcl::cli
