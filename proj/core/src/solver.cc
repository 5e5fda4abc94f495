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

#include "eqcl/solver.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "eqcl/error.h"

namespace eqcl {
namespace {

const Batch& StreamBatch(const Streams& streams, const std::string& name) {
  static const Batch kEmpty;
  if (name.empty()) return kEmpty;
  auto it = streams.find(name);
  if (it == streams.end()) {
    throw ValidationError("no data bound to stream '" + name + "'");
  }
  return it->second;
}

std::vector<ConstraintKind> KindsOf(const Problem& problem) {
  std::vector<ConstraintKind> kinds;
  for (const auto& c : problem.constraints) kinds.push_back(c.kind);
  return kinds;
}

// Dual weight of each constraint, in constraint order.
std::vector<double> Weights(std::span<const ConstraintKind> kinds,
                            const DualState& duals) {
  std::vector<double> w;
  std::size_t i = 0, j = 0;
  for (ConstraintKind k : kinds) {
    if (k == ConstraintKind::kInequality) {
      w.push_back(duals.lambda.at(i++));
    } else {
      w.push_back(duals.mu.at(j++));
    }
  }
  return w;
}

void CheckDualSizes(std::span<const ConstraintKind> kinds, const DualState& duals) {
  const auto ineq = static_cast<std::size_t>(
      std::count(kinds.begin(), kinds.end(), ConstraintKind::kInequality));
  if (duals.lambda.size() != ineq || duals.mu.size() != kinds.size() - ineq) {
    throw ShapeError("dual sizes (" + std::to_string(duals.lambda.size()) + ", " +
                     std::to_string(duals.mu.size()) + ") do not match constraints (" +
                     std::to_string(ineq) + ", " +
                     std::to_string(kinds.size() - ineq) + ")");
  }
}

struct StepExprs {
  Expr objective;
  std::vector<Expr> slacks;
};

StepExprs BuildExprs(const Model& model, const Objective& objective,
                     std::span<const ExpectationConstraint> constraints,
                     const Streams& streams) {
  const ForwardFn forward = ForwardOf(model);
  StepExprs e;
  e.objective = objective.loss
                    ? objective.loss(forward, StreamBatch(streams, objective.stream))
                    : Constant(0.0);
  if (objective.l2_weight != 0.0) {
    e.objective = e.objective + L2Penalty(model, objective.l2_weight);
  }
  for (const auto& c : constraints) {
    e.slacks.push_back(EvalSlack(c, forward, StreamBatch(streams, c.stream)));
  }
  return e;
}

Expr Combine(const StepExprs& e, std::span<const double> weights) {
  Expr l = e.objective;
  for (std::size_t k = 0; k < e.slacks.size(); ++k) {
    l = l + weights[k] * e.slacks[k];
  }
  return l;
}

std::vector<double> LagrangianGradient(const Model& model, const Expr& lagrangian) {
  const Bindings b = model.bindings();
  const Evaluator ev(std::span<const Expr>(&lagrangian, 1), b);
  return ev.Gradient(lagrangian, model.parameter_leaves());
}

double HalfSquaredNorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return 0.5 * s;
}

bool SupportsExactOracle(const Problem& problem) {
  return problem.quadratic_affine && !problem.objective.loss &&
         problem.objective.l2_weight == 1.0;
}

double RunOracle(Model& model, const Problem& problem, const StepExprs& exprs,
                 std::span<const double> weights, const SolverConfig& config,
                 PrimalStepper& stepper) {
  const Expr lagrangian = Combine(exprs, weights);
  if (config.oracle == OracleKind::kExactQp) {
    if (!SupportsExactOracle(problem)) {
      throw ValidationError("exact_qp oracle requested for non-QP problem '" +
                            problem.name + "'");
    }
    // Unit Hessian: theta - grad L(theta) is the minimizer from any theta.
    std::vector<double> theta(model.params().begin(), model.params().end());
    const std::vector<double> g = LagrangianGradient(model, lagrangian);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= g[i];
    model.set_params(theta);
    return HalfSquaredNorm(LagrangianGradient(model, lagrangian));
  }
  double gap = 0.0;
  std::vector<double> theta(model.params().begin(), model.params().end());
  for (int k = 0; k < config.oracle_steps; ++k) {
    const std::vector<double> g = LagrangianGradient(model, lagrangian);
    gap = HalfSquaredNorm(g);
    stepper.Step(theta, g);
    model.set_params(theta);
  }
  return gap;
}

double SquaredDistance(const DualState& a, const DualState& b) {
  if (a.lambda.size() != b.lambda.size() || a.mu.size() != b.mu.size()) {
    throw ShapeError("reference duals do not match the problem");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.lambda.size(); ++i) {
    s += (a.lambda[i] - b.lambda[i]) * (a.lambda[i] - b.lambda[i]);
  }
  for (std::size_t j = 0; j < a.mu.size(); ++j) {
    s += (a.mu[j] - b.mu[j]) * (a.mu[j] - b.mu[j]);
  }
  return s;
}

}  // namespace

void SolverConfig::Validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be > 0");
  if (t_max < 1) throw ValidationError("t_max must be >= 1");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (!(delta >= 0.0)) throw ValidationError("delta must be >= 0");
  if (oracle_steps < 0) throw ValidationError("oracle_steps must be >= 0");
  if (oracle == OracleKind::kGradient && !(lr > 0.0)) {
    throw ValidationError("lr must be > 0");
  }
  if (lr_decay_every < 0 || !(lr_decay > 0.0)) {
    throw ValidationError("invalid learning-rate schedule");
  }
  if (!(divergence_threshold > 0.0)) {
    throw ValidationError("divergence threshold must be > 0");
  }
}

std::size_t Problem::num_inequalities() const {
  return inequality_labels().size();
}

std::size_t Problem::num_equalities() const { return equality_labels().size(); }

std::vector<std::string> Problem::inequality_labels() const {
  std::vector<std::string> out;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::kInequality) out.push_back(c.label);
  }
  return out;
}

std::vector<std::string> Problem::equality_labels() const {
  std::vector<std::string> out;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::kEquality) out.push_back(c.label);
  }
  return out;
}

Sampler FixedStreams(Streams streams) {
  auto shared = std::make_shared<const Streams>(std::move(streams));
  return [shared](std::uint64_t, std::size_t) { return shared; };
}

std::vector<double> Trajectory::lagrangians() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.lagrangian);
  return out;
}

Expr EmpiricalLagrangian(const Model& model, const Objective& objective,
                         std::span<const ExpectationConstraint> constraints,
                         const DualState& duals, const Streams& streams) {
  std::vector<ConstraintKind> kinds;
  for (const auto& c : constraints) kinds.push_back(c.kind);
  CheckDualSizes(kinds, duals);
  const StepExprs e = BuildExprs(model, objective, constraints, streams);
  return Combine(e, Weights(kinds, duals));
}

DualState DualStep(const DualState& duals, std::span<const double> slacks,
                   std::span<const ConstraintKind> kinds, double eta) {
  if (slacks.size() != kinds.size()) throw ShapeError("slack count mismatch");
  CheckDualSizes(kinds, duals);
  DualState next = duals;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k < slacks.size(); ++k) {
    if (std::isnan(slacks[k])) throw NumericalError("NaN slack in dual step");
    if (kinds[k] == ConstraintKind::kInequality) {
      next.lambda[i] = std::max(0.0, duals.lambda[i] + eta * slacks[k]);
      ++i;
    } else {
      next.mu[j] = duals.mu[j] + eta * slacks[k];
      ++j;
    }
  }
  return next;
}

DualState AdaptiveDual::Step(const DualState& duals, std::span<const double> slacks,
                             std::span<const ConstraintKind> kinds) {
  if (slacks.size() != kinds.size()) throw ShapeError("slack count mismatch");
  CheckDualSizes(kinds, duals);
  if (m_.empty()) {
    m_.assign(slacks.size(), 0.0);
    v_.assign(slacks.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
  DualState next = duals;
  std::size_t i = 0, j = 0;
  for (std::size_t k = 0; k < slacks.size(); ++k) {
    if (std::isnan(slacks[k])) throw NumericalError("NaN slack in dual step");
    m_[k] = params_.beta1 * m_[k] + (1.0 - params_.beta1) * slacks[k];
    v_[k] = params_.beta2 * v_[k] + (1.0 - params_.beta2) * slacks[k] * slacks[k];
    const double step = lr_ * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + params_.eps);
    if (kinds[k] == ConstraintKind::kInequality) {
      next.lambda[i] = std::max(0.0, duals.lambda[i] + step);
      ++i;
    } else {
      next.mu[j] = duals.mu[j] + step;
      ++j;
    }
  }
  return next;
}

PrimalStepper::PrimalStepper(const SolverConfig& config) : config_(config) {}

double PrimalStepper::current_lr() const {
  if (config_.lr_decay_every <= 0) return config_.lr;
  const auto epochs = t_ / static_cast<std::size_t>(config_.lr_decay_every);
  return config_.lr * std::pow(config_.lr_decay, static_cast<double>(epochs));
}

void PrimalStepper::Step(std::vector<double>& theta, std::span<const double> grad) {
  if (grad.size() != theta.size()) throw ShapeError("gradient size mismatch");
  const double lr = current_lr();
  ++t_;
  if (config_.optimizer == PrimalOptimizer::kSgd) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
    return;
  }
  if (m_.size() != theta.size()) {
    m_.assign(theta.size(), 0.0);
    v_.assign(theta.size(), 0.0);
  }
  const AdamParams& a = config_.adam;
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = a.beta1 * m_[i] + (1.0 - a.beta1) * grad[i];
    v_[i] = a.beta2 * v_[i] + (1.0 - a.beta2) * grad[i] * grad[i];
    theta[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + a.eps);
  }
}

double PrimalOracle(Model& model, const Problem& problem, const DualState& duals,
                    const Streams& streams, const SolverConfig& config,
                    PrimalStepper& stepper) {
  const std::vector<ConstraintKind> kinds = KindsOf(problem);
  CheckDualSizes(kinds, duals);
  const StepExprs e = BuildExprs(model, problem.objective, problem.constraints, streams);
  return RunOracle(model, problem, e, Weights(kinds, duals), config, stepper);
}

RunResult RunPrimalDual(const Problem& problem, const SolverConfig& config) {
  config.Validate();
  if (!problem.sampler) throw ValidationError("problem has no data sampler");
  if (config.oracle == OracleKind::kExactQp && !SupportsExactOracle(problem)) {
    throw ValidationError("exact_qp oracle requested for non-QP problem '" +
                          problem.name + "'");
  }
  const std::vector<ConstraintKind> kinds = KindsOf(problem);

  Model model = InitParams(problem.model, config.seed);
  if (problem.initial_params) model.set_params(*problem.initial_params);

  DualState duals;
  if (config.initial_duals) {
    duals = *config.initial_duals;
  } else {
    duals.lambda.assign(problem.num_inequalities(), 0.0);
    duals.mu.assign(problem.num_equalities(), 0.0);
  }
  CheckDualSizes(kinds, duals);
  for (double l : duals.lambda) {
    if (!(l >= 0.0)) throw ValidationError("initial lambda must be nonnegative");
  }

  RunResult result{model, duals, {}, false};
  Trajectory& traj = result.trajectory;
  for (const auto& c : problem.constraints) traj.constraint_labels.push_back(c.label);
  traj.inequality_labels = problem.inequality_labels();
  traj.equality_labels = problem.equality_labels();
  traj.steps.reserve(static_cast<std::size_t>(config.t_max));

  PrimalStepper stepper(config);
  std::optional<AdaptiveDual> adaptive;
  if (config.dual_optimizer == DualOptimizer::kAdaptive) {
    adaptive.emplace(config.eta, config.adam);
  }

  std::vector<double> lagrangians;
  double running = 0.0;
  for (int t = 1; t <= config.t_max; ++t) {
    const auto streams = problem.sampler(config.seed, static_cast<std::size_t>(t));
    const StepExprs e = BuildExprs(model, problem.objective, problem.constraints, *streams);
    const std::vector<double> weights = Weights(kinds, duals);
    const double gap = RunOracle(model, problem, e, weights, config, stepper);

    std::vector<Expr> roots{e.objective};
    roots.insert(roots.end(), e.slacks.begin(), e.slacks.end());
    const Bindings b = model.bindings();
    const Evaluator ev(roots, b);

    StepRecord rec;
    rec.step = static_cast<std::size_t>(t);
    rec.objective = ev.Value(e.objective).item();
    rec.lagrangian = rec.objective;
    for (std::size_t k = 0; k < e.slacks.size(); ++k) {
      rec.slacks.push_back(ev.Value(e.slacks[k]).item());
      rec.lagrangian += weights[k] * rec.slacks.back();
    }
    if (!std::isfinite(rec.lagrangian) ||
        std::abs(rec.lagrangian) > config.divergence_threshold) {
      throw DivergenceError("empirical Lagrangian diverged at step " +
                            std::to_string(t) + " (value " +
                            std::to_string(rec.lagrangian) + ")");
    }

    duals = adaptive ? adaptive->Step(duals, rec.slacks, kinds)
                     : DualStep(duals, rec.slacks, kinds, config.eta);
    rec.lambda = duals.lambda;
    rec.mu = duals.mu;
    running += rec.lagrangian;
    rec.avg_lagrangian = running / static_cast<double>(t);
    rec.oracle_gap = gap;
    if (config.reference_duals) {
      rec.dual_distance_sq = SquaredDistance(duals, *config.reference_duals);
    }
    lagrangians.push_back(rec.lagrangian);
    traj.steps.push_back(std::move(rec));

    if (Terminated(lagrangians, config.window, config.delta)) {
      result.converged = true;
      break;
    }
  }
  result.model = std::move(model);
  result.duals = std::move(duals);
  return result;
}

bool Terminated(std::span<const double> lagrangians, int window, double delta) {
  if (window < 1) return false;
  const auto w = static_cast<std::size_t>(window);
  const std::size_t n = lagrangians.size();
  if (n < 2 * w) return false;
  double recent = 0.0, previous = 0.0;
  for (std::size_t i = n - w; i < n; ++i) recent += lagrangians[i];
  for (std::size_t i = n - 2 * w; i < n - w; ++i) previous += lagrangians[i];
  const double change = std::abs(recent - previous) / static_cast<double>(w);
  return change < delta;
}

OptimizationBoundReport OptimizationBoundCheck(const Trajectory& trajectory,
                                               std::optional<double> d_star, double rho,
                                               double eta, double b, double u0) {
  if (!d_star) throw ValidationError("optimization bound needs the optimal dual value");
  if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
  const double dims = static_cast<double>(trajectory.inequality_labels.size() +
                                          trajectory.equality_labels.size());
  OptimizationBoundReport r;
  double sum = 0.0;
  for (std::size_t t = 0; t < trajectory.steps.size(); ++t) {
    sum += trajectory.steps[t].lagrangian;
    const double T = static_cast<double>(t + 1);
    const double lhs = std::abs(*d_star - sum / T);
    const double rhs = rho + u0 / (2.0 * eta * T) + 0.5 * dims * eta * b * b;
    r.lhs.push_back(lhs);
    r.rhs.push_back(rhs);
    const bool ok = lhs <= rhs + 1e-9;
    r.holds.push_back(ok);
    r.all_hold = r.all_hold && ok;
  }
  return r;
}

double MaxAbsLoss(const Trajectory& trajectory) {
  double b = 0.0;
  for (const auto& s : trajectory.steps) {
    b = std::max(b, std::abs(s.objective));
    for (double v : s.slacks) b = std::max(b, std::abs(v));
  }
  return b;
}

Problem ToDoubleSided(const Problem& problem, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("relaxation must be >= 0");
  Problem out = problem;
  out.constraints.clear();
  for (const auto& c : problem.constraints) {
    if (c.kind == ConstraintKind::kInequality) {
      out.constraints.push_back(c);
      continue;
    }
    const LossBuilder h = c.slack;
    out.constraints.push_back(
        {ConstraintKind::kInequality, c.label + "_upper", c.stream,
         [h, eps](const ForwardFn& f, const Batch& b) { return h(f, b) - eps; }});
    out.constraints.push_back(
        {ConstraintKind::kInequality, c.label + "_lower", c.stream,
         [h, eps](const ForwardFn& f, const Batch& b) { return -h(f, b) - eps; }});
  }
  return out;
}

std::vector<double> EffectiveDuals(std::span<const double> mu_plus,
                                   std::span<const double> mu_minus) {
  if (mu_plus.size() != mu_minus.size()) {
    throw ValidationError("mu_plus and mu_minus differ in length");
  }
  std::vector<double> mu(mu_plus.size());
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (mu_plus[j] < 0.0 || mu_minus[j] < 0.0) {
      throw ValidationError("double-sided duals must be nonnegative");
    }
    mu[j] = mu_plus[j] - mu_minus[j];
  }
  return mu;
}

}  // namespace eqcl
