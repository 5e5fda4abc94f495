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

#ifndef EQCL_SOLVER_H_
#define EQCL_SOLVER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqcl/autodiff.h"
#include "eqcl/constraints.h"
#include "eqcl/models.h"

namespace eqcl {

// Dual variables: lambda for inequalities (kept >= 0), mu for equalities.
struct DualState {
  std::vector<double> lambda;
  std::vector<double> mu;

  friend bool operator==(const DualState&, const DualState&) = default;
};

enum class OracleKind { kExactQp, kGradient };
enum class PrimalOptimizer { kSgd, kAdam };
enum class DualOptimizer { kPlain, kAdaptive };

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SolverConfig {
  // Dual step size; the dual learning rate when dual_optimizer is adaptive.
  double eta = 0.01;
  OracleKind oracle = OracleKind::kGradient;
  // Gradient steps per oracle call, warm-started from the previous iterate.
  int oracle_steps = 1;
  PrimalOptimizer optimizer = PrimalOptimizer::kAdam;
  double lr = 1e-3;
  // StepLR: lr is multiplied by lr_decay every lr_decay_every primal steps
  // (0 disables).
  int lr_decay_every = 0;
  double lr_decay = 1.0;
  AdamParams adam;
  DualOptimizer dual_optimizer = DualOptimizer::kPlain;
  int t_max = 1000;
  // Moving-average termination; delta = 0 never fires.
  int window = 100;
  double delta = 0.0;
  std::uint64_t seed = 0;
  // Starting duals; zeros when absent.
  std::optional<DualState> initial_duals;
  // When set, the squared distance of each dual iterate to it is logged.
  std::optional<DualState> reference_duals;
  double divergence_threshold = 1e12;

  void Validate() const;
};

using Streams = std::map<std::string, Batch>;
// Batches for solver step `step` (1-based); static data ignores both arguments.
using Sampler =
    std::function<std::shared_ptr<const Streams>(std::uint64_t seed, std::size_t step)>;

struct Problem {
  std::string name;
  ModelSpec model;
  Objective objective;
  // Inequalities own lambda entries and equalities own mu entries, each in
  // list order.
  std::vector<ExpectationConstraint> constraints;
  Sampler sampler;
  // Objective 1/2 ||theta||^2 with affine slacks: the Lagrangian minimizer is
  // available in closed form.
  bool quadratic_affine = false;
  std::optional<std::vector<double>> initial_params;

  std::size_t num_inequalities() const;
  std::size_t num_equalities() const;
  std::vector<std::string> inequality_labels() const;
  std::vector<std::string> equality_labels() const;
};

// Static sampler serving the same streams every step.
Sampler FixedStreams(Streams streams);

struct StepRecord {
  std::size_t step = 0;
  // Evaluated at the post-oracle model and the duals the oracle minimized
  // against.
  double lagrangian = 0.0;
  double objective = 0.0;
  std::vector<double> slacks;  // problem constraint order
  // Duals after this step's dual update.
  std::vector<double> lambda;
  std::vector<double> mu;
  double avg_lagrangian = 0.0;
  // Exact oracle: L - min L = ||grad L||^2 / 2 at the returned model.
  // Gradient oracle: the same quantity at the last pre-step iterate.
  double oracle_gap = 0.0;
  std::optional<double> dual_distance_sq;
};

struct Trajectory {
  std::vector<std::string> constraint_labels;
  std::vector<std::string> inequality_labels;
  std::vector<std::string> equality_labels;
  std::vector<StepRecord> steps;

  std::size_t size() const { return steps.size(); }
  std::vector<double> lagrangians() const;
};

struct RunResult {
  Model model;
  DualState duals;
  Trajectory trajectory;
  bool converged = false;  // stopped by the termination rule before t_max
};

// Objective mean plus dual-weighted slacks as a differentiable scalar.
Expr EmpiricalLagrangian(const Model& model, const Objective& objective,
                         std::span<const ExpectationConstraint> constraints,
                         const DualState& duals, const Streams& streams);

// Projected ascent: lambda <- max(0, lambda + eta s), mu <- mu + eta s.
// `slacks` is in constraint order with `kinds` giving each entry's type.
DualState DualStep(const DualState& duals, std::span<const double> slacks,
                   std::span<const ConstraintKind> kinds, double eta);

// Adaptive dual ascent (Adam on the ascent direction, projection after).
class AdaptiveDual {
 public:
  AdaptiveDual(double lr, AdamParams params) : lr_(lr), params_(params) {}
  DualState Step(const DualState& duals, std::span<const double> slacks,
                 std::span<const ConstraintKind> kinds);

 private:
  double lr_;
  AdamParams params_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

// First-order optimizer over flat parameters.
class PrimalStepper {
 public:
  explicit PrimalStepper(const SolverConfig& config);
  void Step(std::vector<double>& theta, std::span<const double> grad);
  std::size_t steps_taken() const { return t_; }
  double current_lr() const;

 private:
  SolverConfig config_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

// Approximate minimizer of the empirical Lagrangian at fixed duals. Returns
// the oracle gap estimate described in StepRecord.
double PrimalOracle(Model& model, const Problem& problem, const DualState& duals,
                    const Streams& streams, const SolverConfig& config,
                    PrimalStepper& stepper);

// Algorithm loop: oracle step, then dual step, per iteration. Throws
// DivergenceError when |L| exceeds the guard or turns non-finite.
RunResult RunPrimalDual(const Problem& problem, const SolverConfig& config);

// True iff the window-W moving average of `lagrangians` moved by less than
// delta over the last W steps (needs at least 2W entries).
bool Terminated(std::span<const double> lagrangians, int window, double delta);

struct OptimizationBoundReport {
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<bool> holds;
  bool all_hold = true;
};

// Optimization bound on every prefix T:
//   |d_star - mean_{t<=T} L_t| <= rho + u0 / (2 eta T) + (I + J) eta b^2 / 2
// with u0 the squared distance from the initial duals to the dual optimum.
OptimizationBoundReport OptimizationBoundCheck(const Trajectory& trajectory,
                                               std::optional<double> d_star, double rho,
                                               double eta, double b, double u0);

// Largest |objective| or |slack| recorded on the run.
double MaxAbsLoss(const Trajectory& trajectory);

// Replaces each equality h = 0 by h - eps <= 0 ("<label>_upper") and
// -h - eps <= 0 ("<label>_lower"), in place.
Problem ToDoubleSided(const Problem& problem, double eps);

// mu = mu_plus - mu_minus. Throws ValidationError on negative or mismatched
// input.
std::vector<double> EffectiveDuals(std::span<const double> mu_plus,
                                   std::span<const double> mu_minus);

}  // namespace eqcl

#endif  // EQCL_SOLVER_H_
