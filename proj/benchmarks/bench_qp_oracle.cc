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

#include <Eigen/Dense>

#include "eqcl/qp_oracle.h"

namespace {

struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Instance MakeInstance(Eigen::Index m, Eigen::Index n) {
  std::srand(11);
  Instance in{Eigen::MatrixXd::Random(m, n), Eigen::VectorXd::Random(m)};
  in.X.leftCols(m) += 2.0 * Eigen::MatrixXd::Identity(m, m);
  return in;
}

void BM_SolveEqQp(benchmark::State& state) {
  const Instance in = MakeInstance(state.range(0), 2 * state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::SolveEqQp(in.X, in.y));
}
BENCHMARK(BM_SolveEqQp)->RangeMultiplier(4)->Range(2, 128);

void BM_SolveIneqQp(benchmark::State& state) {
  const Instance in = MakeInstance(state.range(0), 2 * state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::SolveIneqQp(in.X, in.y, 0.1));
}
BENCHMARK(BM_SolveIneqQp)->RangeMultiplier(4)->Range(2, 128);

void BM_SolveBoxQp(benchmark::State& state) {
  const Instance in = MakeInstance(state.range(0), 2 * state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::SolveBoxQp(in.X, in.y, 0.1));
}
// Active-set enumeration is exponential in the row count.
BENCHMARK(BM_SolveBoxQp)->DenseRange(2, 12, 2);

}  // namespace
