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

#include <benchmark/benchmark.h>

#include "eqcl/problems.h"
#include "eqcl/runtime.h"
#include "eqcl/solver.h"

namespace {

// Per-step cost of full primal-dual runs; each iteration runs range(0) steps.

void BM_FairnessSteps(benchmark::State& state) {
  const eqcl::TabularDataset data = eqcl::SynthFairnessDataset(1, {});
  const eqcl::Problem problem = eqcl::BuildFairnessProblem(data, {});
  eqcl::SolverConfig config;
  config.lr = 0.2;
  config.dual_optimizer = eqcl::DualOptimizer::kAdaptive;
  config.eta = 1e-3;
  config.t_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::RunPrimalDual(problem, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FairnessSteps)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ConvectionSteps(benchmark::State& state) {
  eqcl::TuneAllocator();
  eqcl::ConvectionOptions options;
  options.model = {eqcl::ModelKind::kMlp, 2, 1, {32, 32}};
  const eqcl::Problem problem = eqcl::BuildConvectionProblem(options);
  eqcl::SolverConfig config;
  config.dual_optimizer = eqcl::DualOptimizer::kAdaptive;
  config.eta = 1e-4;
  config.t_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::RunPrimalDual(problem, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvectionSteps)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ExactOracleQp(benchmark::State& state) {
  const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(4, 8) + 0.1 * Eigen::MatrixXd::Ones(4, 8);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const eqcl::Problem problem = eqcl::BuildQpProblem(X, y);
  eqcl::SolverConfig config;
  config.oracle = eqcl::OracleKind::kExactQp;
  config.eta = 0.5;
  config.t_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::RunPrimalDual(problem, config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExactOracleQp)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
