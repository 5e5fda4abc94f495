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


#include "experiments.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "eqcl/error.h"
#include "eqcl/problems.h"
#include "eqcl/qp_oracle.h"
#include "eqcl/trajectory_io.h"

namespace eqcl::cli {
namespace {

using nlohmann::json;

struct QpData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

QpData ReadQp(const json& p) {
  const auto rows = p.at("X").get<std::vector<std::vector<double>>>();
  const auto y = p.at("y").get<std::vector<double>>();
  if (rows.empty() || rows[0].empty()) throw ValidationError("problem.X is empty");
  QpData d{Eigen::MatrixXd(rows.size(), rows[0].size()), Eigen::VectorXd(y.size())};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ValidationError("problem.X is ragged");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i) d.y[static_cast<Eigen::Index>(i)] = y[i];
  RequireFullRank(d.X, d.y);
  return d;
}

std::vector<double> ToStd(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd ToEigen(std::span<const double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

json Labelled(const std::vector<std::string>& labels, const std::vector<double>& values) {
  json j = json::object();
  for (std::size_t i = 0; i < labels.size() && i < values.size(); ++i) j[labels[i]] = values[i];
  return j;
}

json BaseMetrics(const RunConfig& config, const RunResult& r, double seconds) {
  json m = {{"experiment", ExperimentName(config.experiment)},
            {"seed", config.seed},
            {"steps", r.trajectory.size()},
            {"converged", r.converged},
            {"runtime_seconds", seconds}};
  if (!r.trajectory.steps.empty()) {
    const StepRecord& last = r.trajectory.steps.back();
    m["final"] = {{"lagrangian", last.lagrangian},
                  {"objective", last.objective},
                  {"avg_lagrangian", last.avg_lagrangian},
                  {"slacks", Labelled(r.trajectory.constraint_labels, last.slacks)},
                  {"lambda", Labelled(r.trajectory.inequality_labels, r.duals.lambda)},
                  {"mu", Labelled(r.trajectory.equality_labels, r.duals.mu)}};
  }
  return m;
}

struct Timed {
  RunResult result;
  double seconds = 0.0;
};

Timed TimedRun(const Problem& problem, const SolverConfig& solver) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r = RunPrimalDual(problem, solver);
  return {std::move(r),
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

void Emit(const RunConfig& config, const Trajectory& t, const json& metrics) {
  WriteTrajectoryCsv(t, config.output_dir / "trajectory.csv");
  WriteFileAtomic(config.output_dir / "metrics.json", metrics.dump(2) + "\n");
}

json RunQpEq(const RunConfig& config) {
  const QpData d = ReadQp(config.problem);
  const QpSolution star = SolveEqQp(d.X, d.y);
  const Timed run = TimedRun(BuildQpProblem(d.X, d.y), config.solver);
  const Eigen::VectorXd w = ToEigen(run.result.model.params());
  const Eigen::VectorXd mu = ToEigen(run.result.duals.mu);
  json m = BaseMetrics(config, run.result, run.seconds);
  m["mu_star"] = ToStd(star.mu);
  m["w_star"] = ToStd(star.w);
  m["mu"] = ToStd(mu);
  m["w"] = ToStd(w);
  m["mu_error_inf"] = (mu - star.mu).lpNorm<Eigen::Infinity>();
  m["residual_inf"] = (d.X * w - d.y).lpNorm<Eigen::Infinity>();
  // First step whose duals are within 1e-4 of mu* in the max norm.
  json first = nullptr;
  for (const StepRecord& s : run.result.trajectory.steps) {
    if ((ToEigen(s.mu) - star.mu).lpNorm<Eigen::Infinity>() <= 1e-4) {
      first = s.step;
      break;
    }
  }
  m["convergence_step"] = first;
  Emit(config, run.result.trajectory, m);
  return m;
}

json RunQpIneq(const RunConfig& config) {
  const QpData d = ReadQp(config.problem);
  const double eps = config.problem.at("eps").get<double>();
  const QpSolution star = SolveIneqQp(d.X, d.y, eps);
  const Timed run = TimedRun(BuildQpIneqProblem(d.X, d.y, eps), config.solver);
  const Eigen::VectorXd w = ToEigen(run.result.model.params());
  json m = BaseMetrics(config, run.result, run.seconds);
  m["lambda_star"] = star.lambda;
  m["w_star"] = ToStd(star.w);
  m["lambda"] = run.result.duals.lambda.at(0);
  m["w"] = ToStd(w);
  m["w_error_inf"] = (w - star.w).lpNorm<Eigen::Infinity>();
  m["objective_star"] = star.objective;
  Emit(config, run.result.trajectory, m);
  return m;
}

json PerturbationJson(const PerturbationReport& r) {
  return {{"p0", r.p0},       {"p_eps", r.p_eps}, {"gap", r.gap},
          {"lower", r.lower}, {"upper", r.upper}, {"holds", r.holds}};
}

json RunQpPerturb(const RunConfig& config) {
  const QpData d = ReadQp(config.problem);
  const double eps = config.problem.at("eps").get<double>();
  const QpSolution box = SolveBoxQp(d.X, d.y, eps);
  const Timed run =
      TimedRun(ToDoubleSided(BuildQpProblem(d.X, d.y), eps), config.solver);
  const Eigen::VectorXd w = ToEigen(run.result.model.params());
  json m = BaseMetrics(config, run.result, run.seconds);
  m["perturbation"] = PerturbationJson(PerturbationCheck(d.X, d.y, eps));
  m["objective_star"] = box.objective;
  m["objective"] = 0.5 * w.squaredNorm();
  m["mu_plus_star"] = ToStd(box.mu_plus);
  m["mu_minus_star"] = ToStd(box.mu_minus);
  m["w"] = ToStd(w);

  // Sandwich over a grid of relaxations, for plotting.
  std::ostringstream csv;
  csv << "eps,p0,p_eps,gap,lower,upper,holds\n";
  for (int k = 0; k <= 10; ++k) {
    const double e = eps * k / 10.0;
    const PerturbationReport r = PerturbationCheck(d.X, d.y, e);
    csv << FormatDouble(e) << ',' << FormatDouble(r.p0) << ',' << FormatDouble(r.p_eps)
        << ',' << FormatDouble(r.gap) << ',' << FormatDouble(r.lower) << ','
        << FormatDouble(r.upper) << ',' << (r.holds ? 1 : 0) << '\n';
  }
  WriteFileAtomic(config.output_dir / "perturbation.csv", csv.str());
  Emit(config, run.result.trajectory, m);
  return m;
}

FairnessOptions FairnessOf(const json& p) {
  FairnessOptions o;
  o.mode = ParseFairnessMode(p.at("mode").get<std::string>());
  o.rate = p.at("rate").get<double>();
  o.eps = p.at("eps").get<double>();
  o.alpha = p.at("alpha").get<double>();
  return o;
}

json GroupReport(const Model& model, const TabularDataset& data) {
  const std::vector<double> rates = HardGroupRates(model, data);
  return {{"accuracy", Accuracy(model, data)},
          {"group_rates", Labelled(data.group_names, rates)},
          {"disparity", Disparity(rates)}};
}

json RunFairness(const RunConfig& config) {
  const json& ds = config.problem.at("dataset");
  SynthFairnessSpec spec;
  spec.n = ds.at("n").get<std::size_t>();
  spec.groups.clear();
  for (const auto& g : ds.at("groups")) {
    spec.groups.push_back({g.at("weight").get<double>(), g.at("base_rate").get<double>()});
  }
  spec.num_features = ds.at("num_features").get<std::size_t>();
  spec.signal = ds.at("signal").get<double>();
  spec.group_features = ds.at("group_features").get<bool>();
  const TabularDataset data = SynthFairnessDataset(config.seed, spec);
  const Timed run = TimedRun(BuildFairnessProblem(data, FairnessOf(config.problem)),
                             config.solver);
  json m = BaseMetrics(config, run.result, run.seconds);
  m["train"] = GroupReport(run.result.model, data);
  Emit(config, run.result.trajectory, m);
  return m;
}

json RunCustom(const RunConfig& config) {
  const PreprocessSchema schema =
      LoadSchema(config.problem.at("schema").get<std::string>());
  const PreprocessResult data =
      LoadAndPreprocess(config.problem.at("csv").get<std::string>(), schema, config.seed);
  const Timed run = TimedRun(BuildFairnessProblem(data.train, FairnessOf(config.problem)),
                             config.solver);
  json m = BaseMetrics(config, run.result, run.seconds);
  m["train"] = GroupReport(run.result.model, data.train);
  m["train"]["rows"] = data.train.size();
  if (data.test.size() > 0) {
    m["test"] = GroupReport(run.result.model, data.test);
    m["test"]["rows"] = data.test.size();
  }
  m["dropped_test_rows"] = data.dropped;
  m["features"] = data.train.feature_names;
  Emit(config, run.result.trajectory, m);
  return m;
}

json RunBvp(const RunConfig& config) {
  const json& p = config.problem;
  ConvectionOptions o;
  o.beta = p.at("beta").get<double>();
  o.model = {ModelKind::kMlp, 2, 1, p.at("hidden").get<std::vector<std::size_t>>()};
  o.alpha_reg = p.at("alpha_reg").get<double>();
  o.n_pde = p.at("n_pde").get<std::size_t>();
  o.n_bc = p.at("n_bc").get<std::size_t>();
  o.n_ic = p.at("n_ic").get<std::size_t>();
  o.dynamic = p.at("dynamic").get<bool>();
  const auto grid = p.at("grid").get<std::vector<std::size_t>>();
  if (grid.size() != 2) throw ValidationError("problem.grid must be [nx, nt]");
  const Timed run = TimedRun(BuildConvectionProblem(o), config.solver);

  const Tensor points = EvaluationGrid(grid[0], grid[1]);
  const Tensor pred = Predict(run.result.model, points);
  std::vector<double> truth(pred.size());
  std::ostringstream csv;
  csv << "x,t,prediction,truth\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = ConvectionTruth(points.at(i, 0), points.at(i, 1), o.beta);
    csv << FormatDouble(points.at(i, 0)) << ',' << FormatDouble(points.at(i, 1)) << ','
        << FormatDouble(pred[i]) << ',' << FormatDouble(truth[i]) << '\n';
  }
  json m = BaseMetrics(config, run.result, run.seconds);
  m["relative_l2"] = RelativeL2(pred.data(), truth);
  m["grid"] = grid;
  WriteFileAtomic(config.output_dir / "prediction.csv", csv.str());
  Emit(config, run.result.trajectory, m);
  return m;
}

json RunClasswise(const RunConfig& config) {
  const json& p = config.problem;
  ClasswiseSpec spec;
  spec.per_class = p.at("per_class").get<std::size_t>();
  spec.dim = p.at("dim").get<std::size_t>();
  spec.noise = p.at("noise").get<std::vector<double>>();
  spec.separation = p.at("separation").get<double>();
  const TabularDataset data = SynthClasswiseDataset(config.seed, spec);
  const Timed run =
      TimedRun(BuildClasswiseProblem(data, p.at("alpha_reg").get<double>()), config.solver);
  json m = BaseMetrics(config, run.result, run.seconds);
  std::ostringstream csv;
  csv << "class,noise,dual,final_slack\n";
  const auto& slacks = run.result.trajectory.steps.back().slacks;
  for (std::size_t k = 0; k < spec.noise.size(); ++k) {
    csv << k << ',' << FormatDouble(spec.noise[k]) << ','
        << FormatDouble(run.result.duals.mu[k]) << ',' << FormatDouble(slacks[k]) << '\n';
  }
  m["noise"] = spec.noise;
  m["duals"] = run.result.duals.mu;
  m["max_final_slack"] = *std::max_element(slacks.begin(), slacks.end());
  WriteFileAtomic(config.output_dir / "duals.csv", csv.str());
  Emit(config, run.result.trajectory, m);
  return m;
}

json SolutionJson(const QpSolution& s) {
  json j = {{"w", ToStd(s.w)},
            {"objective", s.objective},
            {"residual", s.residual},
            {"dual_l1", s.DualL1()}};
  switch (s.kind) {
    case QpKind::kEquality:
      j["kind"] = "equality";
      j["mu"] = ToStd(s.mu);
      break;
    case QpKind::kInequality:
      j["kind"] = "inequality";
      j["lambda"] = s.lambda;
      j["bisection_steps"] = s.iterations;
      break;
    case QpKind::kBox:
      j["kind"] = "box";
      j["mu_plus"] = ToStd(s.mu_plus);
      j["mu_minus"] = ToStd(s.mu_minus);
      break;
  }
  return j;
}

json KktJson(const KktReport& k) {
  return {{"stationarity", k.stationarity},
          {"primal", k.primal},
          {"dual", k.dual},
          {"complementarity", k.complementarity}};
}

}  // namespace

json QpOracleReport(const RunConfig& config) {
  const QpData d = ReadQp(config.problem);
  json out = {{"experiment", ExperimentName(config.experiment)}};
  switch (config.experiment) {
    case Experiment::kQpEq: {
      const QpSolution s = SolveEqQp(d.X, d.y);
      out["solution"] = SolutionJson(s);
      out["kkt"] = KktJson(KktResiduals(d.X, d.y, 0.0, s));
      break;
    }
    case Experiment::kQpIneq: {
      const double eps = config.problem.at("eps").get<double>();
      const QpSolution s = SolveIneqQp(d.X, d.y, eps);
      out["eps"] = eps;
      out["solution"] = SolutionJson(s);
      out["kkt"] = KktJson(KktResiduals(d.X, d.y, eps, s));
      break;
    }
    case Experiment::kQpPerturb: {
      const double eps = config.problem.at("eps").get<double>();
      const QpSolution s = SolveBoxQp(d.X, d.y, eps);
      out["eps"] = eps;
      out["solution"] = SolutionJson(s);
      out["kkt"] = KktJson(KktResiduals(d.X, d.y, eps, s));
      out["perturbation"] = PerturbationJson(PerturbationCheck(d.X, d.y, eps));
      break;
    }
    default:
      throw ValidationError(std::string("qp-oracle needs a qp experiment, got ") +
                            ExperimentName(config.experiment));
  }
  return out;
}

json RunExperiment(const RunConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  WriteFileAtomic(config.output_dir / "resolved_config.json",
                  config.ToJson().dump(2) + "\n");
  switch (config.experiment) {
    case Experiment::kQpEq:
      return RunQpEq(config);
    case Experiment::kQpIneq:
      return RunQpIneq(config);
    case Experiment::kQpPerturb:
      return RunQpPerturb(config);
    case Experiment::kFairness:
      return RunFairness(config);
    case Experiment::kCustom:
      return RunCustom(config);
    case Experiment::kBvp:
      return RunBvp(config);
    case Experiment::kClasswise:
      return RunClasswise(config);
  }
  throw ValidationError("unhandled experiment");
}

}  // namespace eqcl::cli
