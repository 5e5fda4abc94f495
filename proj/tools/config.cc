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


#include "config.h"

#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "eqcl/error.h"

namespace eqcl::cli {
namespace {

using nlohmann::json;

struct ExperimentInfo {
  Experiment id;
  const char* name;
};

constexpr ExperimentInfo kExperiments[] = {
    {Experiment::kQpEq, "qp_eq"},         {Experiment::kQpIneq, "qp_ineq"},
    {Experiment::kQpPerturb, "qp_perturb"}, {Experiment::kFairness, "fairness"},
    {Experiment::kBvp, "bvp"},            {Experiment::kClasswise, "classwise"},
    {Experiment::kCustom, "custom"},
};

const char* OracleName(OracleKind k) { return k == OracleKind::kExactQp ? "exact_qp" : "gradient"; }
const char* OptimizerName(PrimalOptimizer o) { return o == PrimalOptimizer::kAdam ? "adam" : "sgd"; }
const char* DualName(DualOptimizer d) { return d == DualOptimizer::kAdaptive ? "adaptive" : "plain"; }

template <typename E>
E ParseChoice(const std::string& what, const std::string& name,
              std::initializer_list<std::pair<const char*, E>> choices) {
  std::string known;
  for (const auto& [n, v] : choices) {
    if (name == n) return v;
    known += known.empty() ? n : std::string(", ") + n;
  }
  throw ValidationError("unknown " + what + " '" + name + "' (expected one of " + known + ")");
}

// Defaults follow the published hyperparameters where they exist, and desk
// scale run lengths otherwise.
SolverConfig SolverDefaults(Experiment e) {
  SolverConfig c;
  switch (e) {
    case Experiment::kQpEq:
    case Experiment::kQpPerturb:
      c.oracle = OracleKind::kExactQp;
      c.eta = 0.0;  // auto: 1 / lambda_max(X X^T)
      c.t_max = 50000;
      c.window = 50;
      c.delta = 1e-14;
      break;
    case Experiment::kQpIneq:
      c.oracle = OracleKind::kGradient;
      c.optimizer = PrimalOptimizer::kSgd;
      c.oracle_steps = 50;
      c.lr = 0.05;
      c.eta = 0.5;
      c.t_max = 5000;
      c.window = 100;
      c.delta = 1e-10;
      break;
    case Experiment::kFairness:
    case Experiment::kCustom:
      c.optimizer = PrimalOptimizer::kAdam;
      c.lr = 0.2;
      c.dual_optimizer = DualOptimizer::kAdaptive;
      c.eta = 1e-3;
      c.t_max = 16000;
      c.window = 100;
      c.delta = 1e-5;
      break;
    case Experiment::kBvp:
      c.optimizer = PrimalOptimizer::kAdam;
      c.lr = 1e-3;
      c.lr_decay_every = 5000;
      c.lr_decay = 0.9;
      c.dual_optimizer = DualOptimizer::kAdaptive;
      c.eta = 1e-4;
      c.t_max = 20000;
      break;
    case Experiment::kClasswise:
      c.optimizer = PrimalOptimizer::kAdam;
      c.lr = 0.05;
      c.eta = 25.0;
      c.t_max = 20000;
      break;
  }
  return c;
}

json FairnessKnobs() {
  return {{"mode", "exact_dp"}, {"rate", 0.5}, {"eps", 0.0}, {"alpha", 8.0}};
}

json ProblemDefaults(Experiment e) {
  switch (e) {
    case Experiment::kQpEq:
      return {{"X", nullptr}, {"y", nullptr}, {"random", nullptr}};
    case Experiment::kQpIneq:
      return {{"X", nullptr}, {"y", nullptr}, {"random", nullptr}, {"eps", 0.1}};
    case Experiment::kQpPerturb:
      return {{"X", nullptr}, {"y", nullptr}, {"random", nullptr}, {"eps", 0.2}};
    case Experiment::kFairness: {
      json j = FairnessKnobs();
      j["dataset"] = {{"n", 4000},
                      {"groups", json::array({{{"weight", 0.85}, {"base_rate", 0.7}},
                                              {{"weight", 0.15}, {"base_rate", 0.3}}})},
                      {"num_features", 5},
                      {"signal", 2.0},
                      {"group_features", true}};
      return j;
    }
    case Experiment::kCustom: {
      json j = FairnessKnobs();
      j["csv"] = nullptr;
      j["schema"] = nullptr;
      return j;
    }
    case Experiment::kBvp:
      return {{"beta", 1.0},        {"hidden", {32, 32}}, {"alpha_reg", 0.0},
              {"n_pde", 1000},      {"n_bc", 1000},       {"n_ic", 1000},
              {"dynamic", true},    {"grid", {128, 64}},  {"long_run", false}};
    case Experiment::kClasswise:
      return {{"per_class", 40},
              {"dim", 200},
              {"noise", {0.0, 0.05, 0.15}},
              {"separation", 4.0},
              {"alpha_reg", 1.0}};
  }
  return json::object();
}

// Overwrites defaults key by key; unknown keys are errors so typos surface.
void MergeInto(json& target, const json& source, const std::string& where) {
  if (!source.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : source.items()) {
    if (!target.contains(key)) throw ValidationError("unknown key '" + key + "' in " + where);
    if (target[key].is_object() && value.is_object()) {
      MergeInto(target[key], value, where + "." + key);
    } else {
      target[key] = value;
    }
  }
}

SolverConfig ParseSolver(const json& j, Experiment e) {
  json merged = SolverToJson(SolverDefaults(e));
  if (!j.is_null()) MergeInto(merged, j, "solver");
  SolverConfig c;
  try {
    c.eta = merged.at("eta").get<double>();
    c.oracle = ParseChoice<OracleKind>("oracle", merged.at("oracle").get<std::string>(),
                                       {{"exact_qp", OracleKind::kExactQp},
                                        {"gradient", OracleKind::kGradient}});
    c.oracle_steps = merged.at("oracle_steps").get<int>();
    c.optimizer = ParseChoice<PrimalOptimizer>(
        "optimizer", merged.at("optimizer").get<std::string>(),
        {{"sgd", PrimalOptimizer::kSgd}, {"adam", PrimalOptimizer::kAdam}});
    c.lr = merged.at("lr").get<double>();
    c.lr_decay_every = merged.at("lr_decay_every").get<int>();
    c.lr_decay = merged.at("lr_decay").get<double>();
    json adam = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}};
    MergeInto(adam, merged.at("adam"), "solver.adam");
    c.adam = {adam.at("beta1").get<double>(), adam.at("beta2").get<double>(),
              adam.at("eps").get<double>()};
    c.dual_optimizer = ParseChoice<DualOptimizer>(
        "dual optimizer", merged.at("dual_optimizer").get<std::string>(),
        {{"plain", DualOptimizer::kPlain}, {"adaptive", DualOptimizer::kAdaptive}});
    c.t_max = merged.at("t_max").get<int>();
    c.window = merged.at("window").get<int>();
    c.delta = merged.at("delta").get<double>();
    c.divergence_threshold = merged.at("divergence_threshold").get<double>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("solver: ") + ex.what());
  }
  return c;
}

std::filesystem::path ExistingPath(const json& value, const std::filesystem::path& base,
                                   const std::string& key) {
  if (!value.is_string()) throw ValidationError("problem." + key + " must be a path");
  std::filesystem::path p = value.get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p)) {
    throw ValidationError("problem." + key + ": no such file " + p.string());
  }
  return std::filesystem::canonical(p);
}

// Replaces {"random": {...}} with an explicit instance: rows x cols standard
// normal entries, redrawn until cond(X X^T) <= max_cond.
void ExpandQpInstance(json& p, std::uint64_t seed) {
  const bool explicit_instance = !p.at("X").is_null() || !p.at("y").is_null();
  if (explicit_instance == !p.at("random").is_null()) {
    throw ValidationError("qp problem needs either X and y or a random spec");
  }
  if (explicit_instance) {
    p.erase("random");
    return;
  }
  json spec = {{"rows", 3}, {"cols", 5}, {"max_cond", 100.0}};
  MergeInto(spec, p.at("random"), "problem.random");
  const int rows = spec.at("rows").get<int>(), cols = spec.at("cols").get<int>();
  const double max_cond = spec.at("max_cond").get<double>();
  if (rows < 1 || cols < rows || !(max_cond >= 1.0)) {
    throw ValidationError("problem.random needs 1 <= rows <= cols and max_cond >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(rows, cols);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 10000) throw ValidationError("could not draw a matrix within max_cond");
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) X(r, c) = normal(rng);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= max_cond) break;
  }
  json xs = json::array(), ys = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) row.push_back(X(r, c));
    xs.push_back(row);
    ys.push_back(normal(rng));
  }
  p["X"] = xs;
  p["y"] = ys;
  p.erase("random");
}

double LargestEigenOfGram(const json& x) {
  const auto rows = x.get<std::vector<std::vector<double>>>();
  if (rows.empty() || rows[0].empty()) throw ValidationError("problem.X is empty");
  Eigen::MatrixXd X(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw ValidationError("problem.X is ragged");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(X * X.transpose())
      .eigenvalues()
      .maxCoeff();
}

// The full-scale convection regime: beta = 30, four 50-wide layers,
// 300k steps, evaluation on the 512 x 251 grid.
void ApplyLongRun(json& p, SolverConfig& c) {
  p["beta"] = 30.0;
  p["hidden"] = {50, 50, 50, 50};
  p["grid"] = {512, 251};
  c.t_max = 300000;
}

}  // namespace

Experiment ParseExperiment(const std::string& name) {
  for (const auto& e : kExperiments) {
    if (name == e.name) return e.id;
  }
  throw ValidationError("unknown experiment '" + name + "'");
}

const char* ExperimentName(Experiment e) {
  for (const auto& x : kExperiments) {
    if (x.id == e) return x.name;
  }
  return "?";
}

json SolverToJson(const SolverConfig& c) {
  return {{"eta", c.eta},
          {"oracle", OracleName(c.oracle)},
          {"oracle_steps", c.oracle_steps},
          {"optimizer", OptimizerName(c.optimizer)},
          {"lr", c.lr},
          {"lr_decay_every", c.lr_decay_every},
          {"lr_decay", c.lr_decay},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"dual_optimizer", DualName(c.dual_optimizer)},
          {"t_max", c.t_max},
          {"window", c.window},
          {"delta", c.delta},
          {"divergence_threshold", c.divergence_threshold}};
}

json RunConfig::ToJson() const {
  return {{"experiment", ExperimentName(experiment)},
          {"seed", seed},
          {"output_dir", output_dir.string()},
          {"solver", SolverToJson(solver)},
          {"problem", problem}};
}

RunConfig ResolveRunConfig(const json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "experiment" && key != "seed" && key != "output_dir" && key != "solver" &&
        key != "problem") {
      throw ValidationError("unknown top-level key '" + key + "'");
    }
  }
  RunConfig rc;
  try {
    if (!j.contains("experiment")) throw ValidationError("config needs 'experiment'");
    rc.experiment = ParseExperiment(j.at("experiment").get<std::string>());
    if (overrides.seed) {
      rc.seed = *overrides.seed;
    } else if (j.contains("seed")) {
      rc.seed = j.at("seed").get<std::uint64_t>();
    } else {
      throw ValidationError("config needs 'seed' (or pass --seed)");
    }
    if (overrides.output_dir) {
      rc.output_dir = *overrides.output_dir;
    } else if (j.contains("output_dir")) {
      rc.output_dir = base_dir / j.at("output_dir").get<std::string>();
    } else {
      throw ValidationError("config needs 'output_dir' (or pass --out)");
    }
    rc.output_dir = std::filesystem::absolute(rc.output_dir).lexically_normal();

    rc.solver = ParseSolver(j.value("solver", json()), rc.experiment);
    rc.solver.seed = rc.seed;

    rc.problem = ProblemDefaults(rc.experiment);
    if (j.contains("problem")) MergeInto(rc.problem, j.at("problem"), "problem");

    switch (rc.experiment) {
      case Experiment::kQpEq:
      case Experiment::kQpIneq:
      case Experiment::kQpPerturb:
        ExpandQpInstance(rc.problem, rc.seed);
        if (rc.solver.oracle == OracleKind::kExactQp && rc.solver.eta == 0.0) {
          rc.solver.eta = 1.0 / LargestEigenOfGram(rc.problem.at("X"));
        }
        break;
      case Experiment::kCustom:
        rc.problem["csv"] = ExistingPath(rc.problem.at("csv"), base_dir, "csv").string();
        rc.problem["schema"] =
            ExistingPath(rc.problem.at("schema"), base_dir, "schema").string();
        break;
      case Experiment::kBvp:
        if (rc.problem.at("long_run").get<bool>()) ApplyLongRun(rc.problem, rc.solver);
        break;
      case Experiment::kFairness:
      case Experiment::kClasswise:
        break;
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("config: ") + ex.what());
  }
  rc.solver.Validate();
  return rc;
}

RunConfig LoadRunConfig(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& ex) {
    throw ValidationError("config " + path.string() + ": " + ex.what());
  }
  return ResolveRunConfig(j, std::filesystem::absolute(path).parent_path(), overrides);
}

}  // namespace eqcl::cli
