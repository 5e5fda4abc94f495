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

// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// quantities. Reference values come from the independent helpers in
// oracles.h or from closed forms computed here, never from the code under
// test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "eqcl/autodiff.h"
#include "eqcl/constraints.h"
#include "eqcl/error.h"
#include "eqcl/models.h"
#include "eqcl/problems.h"
#include "eqcl/qp_oracle.h"
#include "eqcl/runtime.h"
#include "eqcl/solver.h"
#include "oracles.h"

using namespace eqcl;
namespace oracle = eqcl::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

// Full row rank m x n with cond(XX^T) <= max_cond, by rejection.
Eigen::MatrixXd WideWellConditioned(std::mt19937_64& rng, int m, int n, double max_cond) {
  std::normal_distribution<double> normal;
  for (;;) {
    Eigen::MatrixXd X(m, n);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < n; ++c) X(r, c) = normal(rng);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= max_cond) return X;
  }
}

double LargestEigen(const Eigen::MatrixXd& X) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
  return eig.eigenvalues().maxCoeff();
}

Eigen::VectorXd ClosedFormMu(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return -(X * X.transpose()).fullPivLu().solve(y);
}

Eigen::VectorXd ParamsOf(const Model& m) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(m.num_params()));
  for (std::size_t i = 0; i < m.num_params(); ++i) {
    w[static_cast<Eigen::Index>(i)] = m.params()[i];
  }
  return w;
}

SolverConfig ExactQpConfig(double eta, int steps) {
  SolverConfig c;
  c.oracle = OracleKind::kExactQp;
  c.eta = eta;
  c.t_max = steps;
  return c;
}

// ---------------------------------------------------------------------------

Outcome QpConvergence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(2, 8);
  double worst_mu = 0.0, worst_res = 0.0;
  std::size_t most_steps = 0;
  bool ok = true;
  for (int inst = 0; inst < 25; ++inst) {
    const int n = size(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = WideWellConditioned(rng, m, n, 100.0);
    const Eigen::VectorXd y = oracle::RandomVector(rng, m);
    SolverConfig c = ExactQpConfig(1.0 / LargestEigen(X), 50000);
    c.window = 50;
    c.delta = 1e-14;
    const RunResult r = RunPrimalDual(BuildQpProblem(X, y), c);
    const Eigen::VectorXd mu_star = ClosedFormMu(X, y);
    double mu_err = 0.0;
    for (int i = 0; i < m; ++i) {
      mu_err = std::max(mu_err, std::abs(r.duals.mu[static_cast<std::size_t>(i)] - mu_star[i]));
    }
    const double res = (X * ParamsOf(r.model) - y).lpNorm<Eigen::Infinity>();
    worst_mu = std::max(worst_mu, mu_err);
    worst_res = std::max(worst_res, res);
    most_steps = std::max(most_steps, r.trajectory.size());
    ok = ok && mu_err <= 1e-4 && res <= 1e-5 && r.trajectory.size() <= 50000;
  }
  const double secs = Seconds(start);
  ok = ok && secs < 10.0;
  return {ok, Fmt("25 instances: max |mu - mu*| = %.2e, max |Xw - y| = %.2e, "
                  "max steps = %zu, %.2f s",
                  worst_mu, worst_res, most_steps, secs)};
}

Outcome DivergingMultiplier() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> size(1, 6);
  std::vector<double> eps;
  for (double e = 0.1; e >= 1e-6; e /= 2.0) eps.push_back(e);
  bool ok = true;
  double worst_rel = 0.0;
  int increasing = 0;
  for (int inst = 0; inst < 10; ++inst) {
    const int n = size(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = WideWellConditioned(rng, m, n, 100.0);
    Eigen::VectorXd y = oracle::RandomVector(rng, m);
    // Keep w = 0 infeasible for every eps in the sweep.
    y *= std::max(1.0, 1.0 / y.norm());
    double prev = -1.0;
    bool mono = true;
    for (double e : eps) {
      const double lam = SolveIneqQp(X, y, e).lambda;
      const double ref = oracle::BisectLambda(X, y, e);
      worst_rel = std::max(worst_rel, std::abs(lam - ref) / ref);
      mono = mono && lam > prev;
      prev = lam;
    }
    increasing += mono ? 1 : 0;
  }
  ok = increasing == 10 && worst_rel <= 1e-6;
  const double hand =
      SolveIneqQp(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Constant(1, 1.0),
                  0.125)
          .lambda;
  ok = ok && std::abs(hand - 1.0) <= 1e-9;
  return {ok, Fmt("%d/10 strictly increasing over %zu eps values, max rel err vs "
                  "bisection = %.2e, hand lambda = %.12f",
                  increasing, eps.size(), worst_rel, hand)};
}

// KKT certificate for the box QP, written out independently of the library.
double BoxKkt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eps,
              const QpSolution& s) {
  const Eigen::VectorXd r = X * s.w - y;
  const Eigen::VectorXd nu = s.mu_plus - s.mu_minus;
  double worst = (s.w + X.transpose() * nu).lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    worst = std::max(worst, std::abs(r[i]) - eps);
    worst = std::max({worst, -s.mu_plus[i], -s.mu_minus[i]});
    worst = std::max(worst, std::abs(s.mu_plus[i] * (r[i] - eps)));
    worst = std::max(worst, std::abs(s.mu_minus[i] * (-r[i] - eps)));
  }
  return worst;
}

Outcome PerturbationSandwich() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> diag(0.5, 2.0), unit(0.0, 1.0);
  int diag_ok = 0;
  double worst_diag = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = size(rng);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d[i] = diag(rng);
    const Eigen::VectorXd y = oracle::RandomVector(rng, n);
    const double eps = unit(rng);
    const PerturbationReport rep = PerturbationCheck(d.asDiagonal().toDenseMatrix(), y, eps);
    const oracle::DiagonalBoxSolution at_eps = oracle::ClipDiagonal(d, y, eps);
    const oracle::DiagonalBoxSolution at_zero = oracle::ClipDiagonal(d, y, 0.0);
    const double gap = at_zero.objective - at_eps.objective;
    const double lower = eps * at_eps.dual_l1, upper = eps * at_zero.dual_l1;
    const double dev = std::max({std::abs(rep.gap - gap), std::abs(rep.lower - lower),
                                 std::abs(rep.upper - upper)});
    worst_diag = std::max(worst_diag, dev);
    const bool sandwich = lower <= gap + 1e-9 && gap <= upper + 1e-9;
    diag_ok += (rep.holds && sandwich && dev <= 1e-9) ? 1 : 0;
  }
  std::uniform_int_distribution<int> gsize(1, 6);
  int general_ok = 0;
  double worst_kkt = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = gsize(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = WideWellConditioned(rng, m, n, 100.0);
    const Eigen::VectorXd y = oracle::RandomVector(rng, m);
    const double eps = 0.5 * unit(rng);
    const PerturbationReport rep = PerturbationCheck(X, y, eps);
    const double kkt = std::max(BoxKkt(X, y, eps, SolveBoxQp(X, y, eps)),
                                BoxKkt(X, y, 0.0, SolveBoxQp(X, y, 0.0)));
    worst_kkt = std::max(worst_kkt, kkt);
    general_ok += (rep.holds && kkt <= 1e-9) ? 1 : 0;
  }
  const PerturbationReport hand =
      PerturbationCheck(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, 0.0), 0.2);
  const bool hand_ok = std::abs(hand.gap - 0.18) <= 1e-12 &&
                       std::abs(hand.lower - 0.16) <= 1e-12 &&
                       std::abs(hand.upper - 0.20) <= 1e-12 && hand.holds;
  return {diag_ok == 100 && general_ok == 20 && hand_ok,
          Fmt("diagonal %d/100 (max dev from clipping %.1e), general %d/20 "
              "(max KKT residual %.1e), hand gap %.4f in [%.4f, %.4f]",
              diag_ok, worst_diag, general_ok, worst_kkt, hand.gap, hand.lower, hand.upper)};
}

// Largest per-step |mu - (lambda_upper - lambda_lower)| between an equality
// run and its double-sided twin at half the step, started at B' = 10 eta B T.
double EquivalenceGap(const Problem& eq, SolverConfig config) {
  const RunResult a = RunPrimalDual(eq, config);
  const double b = MaxAbsLoss(a.trajectory);
  const double start = 10.0 * config.eta * b * static_cast<double>(config.t_max);
  const std::size_t j = eq.num_equalities();
  config.eta /= 2.0;
  config.initial_duals = DualState{std::vector<double>(2 * j, start), {}};
  const RunResult d = RunPrimalDual(ToDoubleSided(eq, 0.0), config);
  if (d.trajectory.size() != a.trajectory.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t t = 0; t < a.trajectory.size(); ++t) {
    const auto& l = d.trajectory.steps[t].lambda;
    std::vector<double> up(j), down(j);
    for (std::size_t k = 0; k < j; ++k) {
      up[k] = l[2 * k];
      down[k] = l[2 * k + 1];
    }
    const std::vector<double> mu = EffectiveDuals(up, down);
    for (std::size_t k = 0; k < j; ++k) {
      worst = std::max(worst, std::abs(mu[k] - a.trajectory.steps[t].mu[k]));
    }
  }
  return worst;
}

Outcome DoubleSidedEquivalence() {
  std::mt19937_64 rng(404);
  const Eigen::MatrixXd X = WideWellConditioned(rng, 3, 5, 100.0);
  const Eigen::VectorXd y = oracle::RandomVector(rng, 3);
  const double qp_gap =
      EquivalenceGap(BuildQpProblem(X, y), ExactQpConfig(0.5 / LargestEigen(X), 1000));

  const TabularDataset data = SynthFairnessDataset(1, {});
  SolverConfig c;
  c.lr = 0.2;
  c.eta = 0.05;
  c.t_max = 1000;
  const double fair_gap = EquivalenceGap(BuildFairnessProblem(data, {}), c);
  return {qp_gap <= 1e-10 && fair_gap <= 1e-10,
          Fmt("max per-step dual gap over 1000 steps: qp %.2e, fairness %.2e", qp_gap,
              fair_gap)};
}

Outcome OptimizationBound() {
  std::mt19937_64 rng(505);
  int holding = 0;
  double worst_rho = 0.0, worst_slack = INFINITY;
  for (int inst = 0; inst < 5; ++inst) {
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    const int m = std::uniform_int_distribution<int>(1, n)(rng);
    const Eigen::MatrixXd X = WideWellConditioned(rng, m, n, 100.0);
    const Eigen::VectorXd y = oracle::RandomVector(rng, m);
    const double eta = 0.5 / LargestEigen(X);
    const RunResult r = RunPrimalDual(BuildQpProblem(X, y), ExactQpConfig(eta, 2000));
    double rho = 0.0;
    for (const auto& s : r.trajectory.steps) rho = std::max(rho, s.oracle_gap);
    // Strong duality: D* = P* = 1/2 ||w*||^2 with w* = X^T (XX^T)^{-1} y.
    const Eigen::VectorXd mu_star = ClosedFormMu(X, y);
    const double d_star = 0.5 * (X.transpose() * mu_star).squaredNorm();
    const auto rep = OptimizationBoundCheck(r.trajectory, d_star, rho, eta,
                                            MaxAbsLoss(r.trajectory), mu_star.squaredNorm());
    for (std::size_t t = 0; t < rep.lhs.size(); ++t) {
      worst_slack = std::min(worst_slack, rep.rhs[t] - rep.lhs[t]);
    }
    worst_rho = std::max(worst_rho, rho);
    holding += (rep.all_hold && rho <= 1e-10) ? 1 : 0;
  }
  return {holding == 5, Fmt("%d/5 runs hold at every prefix, max rho = %.1e, "
                            "min (rhs - lhs) = %.3e",
                            holding, worst_rho, worst_slack)};
}

Outcome FairnessDesk() {
  const auto start = Clock::now();
  const TabularDataset data = SynthFairnessDataset(1, {});
  SolverConfig c;
  c.lr = 0.2;
  c.eta = 1e-3;
  c.dual_optimizer = DualOptimizer::kAdaptive;
  c.t_max = 16000;
  c.window = 100;
  c.delta = 1e-5;
  auto run = [&](FairnessMode mode) {
    FairnessOptions o;
    o.mode = mode;
    return RunPrimalDual(BuildFairnessProblem(data, o), c).model;
  };
  const Model free_model = run(FairnessMode::kUnconstrained);
  const Model dp_model = run(FairnessMode::kExactDp);
  const Model rate_model = run(FairnessMode::kPrescribed);
  const double free_disp = Disparity(HardGroupRates(free_model, data));
  const double dp_disp = Disparity(HardGroupRates(dp_model, data));
  const double drop = Accuracy(free_model, data) - Accuracy(dp_model, data);
  const std::vector<double> rates = HardGroupRates(rate_model, data);
  double rate_dev = 0.0;
  for (double r : rates) rate_dev = std::max(rate_dev, std::abs(r - 0.5));
  const double secs = Seconds(start);
  return {free_disp >= 0.10 && dp_disp <= 0.02 && drop <= 0.05 && rate_dev <= 0.03 &&
              secs < 120.0,
          Fmt("unconstrained disparity %.4f, dp disparity %.4f, accuracy drop %.2f "
              "points, prescribed max |rate - 0.5| = %.4f, %.1f s",
              free_disp, dp_disp, 100.0 * drop, rate_dev, secs)};
}

Outcome ConvectionDesk() {
  const auto start = Clock::now();
  ConvectionOptions o;
  o.beta = 1.0;
  o.model = {ModelKind::kMlp, 2, 1, {32, 32}};
  SolverConfig c;
  c.optimizer = PrimalOptimizer::kAdam;
  c.lr = 1e-3;
  c.lr_decay_every = 5000;
  c.lr_decay = 0.9;
  c.dual_optimizer = DualOptimizer::kAdaptive;
  c.eta = 1e-4;
  c.t_max = 20000;
  c.seed = 1;
  const RunResult r = RunPrimalDual(BuildConvectionProblem(o), c);
  const double err = ConvectionError(r.model, 1.0, 128, 64);
  const double secs = Seconds(start);
  return {err < 0.05 && secs < 300.0,
          Fmt("relative L2 error %.2f%% after %zu steps, %.1f s", 100.0 * err,
              r.trajectory.size(), secs)};
}

Outcome ClasswiseDesk() {
  const std::vector<double> noise = {0.0, 0.05, 0.15};
  double worst_slack = 0.0, rho_sum = 0.0;
  std::string per_seed;
  for (int seed = 1; seed <= 5; ++seed) {
    ClasswiseSpec spec;
    spec.noise = noise;
    const TabularDataset data = SynthClasswiseDataset(static_cast<std::uint64_t>(seed), spec);
    SolverConfig c;
    c.optimizer = PrimalOptimizer::kAdam;
    c.lr = 0.05;
    c.eta = 25.0;
    c.t_max = 20000;
    const RunResult r = RunPrimalDual(BuildClasswiseProblem(data, 1.0), c);
    for (double s : r.trajectory.steps.back().slacks) worst_slack = std::max(worst_slack, s);
    const double rho = oracle::Spearman(r.duals.mu, noise);
    rho_sum += rho;
    per_seed += Fmt(" %.2f", rho);
  }
  const double mean_rho = rho_sum / 5.0;
  return {worst_slack < 1e-3 && mean_rho >= 0.6,
          Fmt("max final class slack %.2e, Spearman(dual, noise) mean %.2f (per seed:%s)",
              worst_slack, mean_rho, per_seed.c_str())};
}

// ---------------------------------------------------------------------------

struct Family {
  std::string name;
  ModelSpec spec;
  double scale;  // spread of the random evaluation points
  std::function<Expr(const Model&)> build;
};

Outcome GradientSuite() {
  const auto start = Clock::now();
  std::vector<Family> families;

  std::mt19937_64 rng(909);
  const Eigen::MatrixXd X = WideWellConditioned(rng, 3, 4, 100.0);
  const Eigen::VectorXd y = oracle::RandomVector(rng, 3);
  const Problem qp = BuildQpProblem(X, y);
  const Problem qp_ineq = BuildQpIneqProblem(X, y, 0.1);
  const TabularDataset fair = SynthFairnessDataset(3, {.n = 300});
  const Problem dp = BuildFairnessProblem(fair, {});
  const Problem rate = BuildFairnessProblem(fair, {.mode = FairnessMode::kPrescribed});
  const Problem two_sided =
      BuildFairnessProblem(fair, {.mode = FairnessMode::kDoubleSided, .eps = 0.01});
  const TabularDataset cw = SynthClasswiseDataset(3, {.per_class = 10, .dim = 8});
  const Problem classwise = BuildClasswiseProblem(cw, 1.0);
  ConvectionOptions co;
  co.beta = 2.0;
  co.model = {ModelKind::kMlp, 2, 1, {8, 8}};
  co.n_pde = co.n_bc = co.n_ic = 20;
  co.alpha_reg = 0.5;
  const Problem bvp = BuildConvectionProblem(co);

  auto add_problem = [&](const std::string& tag, const Problem& p, double scale) {
    const auto streams = p.sampler(7, 1);
    families.push_back({tag + "/objective", p.model, scale, [&p, streams](const Model& m) {
                          return EmpiricalLagrangian(m, p.objective, {}, {}, *streams);
                        }});
    for (const auto& c : p.constraints) {
      families.push_back({tag + "/" + c.label, p.model, scale, [&c, streams](const Model& m) {
                            return EvalSlack(c, m, streams->at(c.stream));
                          }});
    }
    families.push_back({tag + "/lagrangian", p.model, scale, [&p, streams](const Model& m) {
                          DualState d;
                          for (std::size_t i = 0; i < p.num_inequalities(); ++i) {
                            d.lambda.push_back(0.3 + 0.2 * static_cast<double>(i));
                          }
                          for (std::size_t i = 0; i < p.num_equalities(); ++i) {
                            d.mu.push_back(0.7 - 0.4 * static_cast<double>(i));
                          }
                          return EmpiricalLagrangian(m, p.objective, p.constraints, d,
                                                     *streams);
                        }});
  };
  add_problem("qp", qp, 1.0);
  add_problem("qp_ineq", qp_ineq, 1.0);
  add_problem("fairness_dp", dp, 0.5);
  add_problem("fairness_rate", rate, 0.5);
  add_problem("fairness_double_sided", two_sided, 0.5);
  add_problem("classwise", classwise, 0.5);
  add_problem("bvp", bvp, 0.8);

  bool ok = true;
  std::string failures;
  double worst = 0.0;
  std::normal_distribution<double> normal;
  for (const auto& f : families) {
    double family_worst = 0.0;
    // Diagnostics only: coordinates whose autodiff derivative is exactly zero,
    // and the error over the remaining ones against an independent quotient.
    std::size_t zero_coords = 0;
    double nonzero_worst = 0.0;
    for (int point = 0; point < 10; ++point) {
      Model m(f.spec);
      std::vector<double> theta(m.num_params());
      for (double& v : theta) v = f.scale * normal(rng);
      m.set_params(theta);
      const Expr e = f.build(m);
      const double err = FiniteDiffCheck(e, m.bindings(), 1e-5);
      family_worst = std::max(family_worst, std::isfinite(err) ? err : INFINITY);
      if (err < 1e-5) continue;
      const std::vector<double> ad = GradParams(e, m.bindings());
      const std::vector<double> fd = oracle::CentralGradient(
          [&](const std::vector<double>& p) {
            Model probe(f.spec);
            probe.set_params(p);
            return Evaluate(f.build(probe), probe.bindings()).item();
          },
          theta, 1e-5);
      for (std::size_t i = 0; i < ad.size(); ++i) {
        if (ad[i] == 0.0) {
          ++zero_coords;
          continue;
        }
        nonzero_worst =
            std::max(nonzero_worst, std::abs(ad[i] - fd[i]) / (std::abs(ad[i]) + 1e-12));
      }
    }
    worst = std::max(worst, family_worst);
    if (!(family_worst < 1e-5)) {
      ok = false;
      failures += Fmt(" %s=%.2e (%zu exactly-zero derivatives; error elsewhere %.1e)",
                      f.name.c_str(), family_worst, zero_coords, nonzero_worst);
    }
  }
  const double secs = Seconds(start);
  ok = ok && secs < 30.0;
  return {ok, Fmt("%zu families x 10 points, max error %.2e, %.1f s%s%s", families.size(),
                  worst, secs, failures.empty() ? "" : "; over tolerance:",
                  failures.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  TuneAllocator();
  CLI::App app{"eqcl acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"qp equality convergence", QpConvergence},
      {"diverging inequality multiplier", DivergingMultiplier},
      {"perturbation sandwich", PerturbationSandwich},
      {"double-sided equivalence", DoubleSidedEquivalence},
      {"optimization bound", OptimizationBound},
      {"fairness desk scale", FairnessDesk},
      {"convection desk scale", ConvectionDesk},
      {"classwise interpolation", ClasswiseDesk},
      {"gradient suite", GradientSuite},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only != 0 && id != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
