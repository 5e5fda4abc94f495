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

#include <random>
#include <vector>

#include "eqcl/autodiff.h"

namespace {

eqcl::Tensor RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.3);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = normal(rng);
  return eqcl::Tensor::Matrix(rows, cols, std::move(data));
}

// Two tanh layers of width 32 over a batch, the shape of the PDE network.
struct TwoLayer {
  eqcl::Expr x, w1, w2, w3, loss;
  eqcl::Bindings bindings;

  explicit TwoLayer(std::size_t batch) {
    std::mt19937_64 rng(7);
    x = eqcl::Input("x", {batch, 2});
    w1 = eqcl::Parameter("w1", {2, 32});
    w2 = eqcl::Parameter("w2", {32, 32});
    w3 = eqcl::Parameter("w3", {32, 1});
    eqcl::Expr h = eqcl::Tanh(eqcl::MatMul(eqcl::Tanh(eqcl::MatMul(x, w1)), w2));
    loss = eqcl::Mean(eqcl::Square(eqcl::MatMul(h, w3)));
    bindings.Bind(x, RandomMatrix(batch, 2, rng))
        .Bind(w1, RandomMatrix(2, 32, rng))
        .Bind(w2, RandomMatrix(32, 32, rng))
        .Bind(w3, RandomMatrix(32, 1, rng));
  }
};

void BM_Forward(benchmark::State& state) {
  TwoLayer net(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::Evaluate(net.loss, net.bindings));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->RangeMultiplier(4)->Range(64, 4096);

void BM_ForwardBackward(benchmark::State& state) {
  TwoLayer net(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::GradParams(net.loss, net.bindings));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->RangeMultiplier(4)->Range(64, 4096);

// Input derivative through the network, as used by PDE residuals.
void BM_Tangent(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  TwoLayer net(batch);
  eqcl::Tensor direction = eqcl::Tensor::Zeros({batch, 2});
  for (std::size_t i = 0; i < batch; ++i) direction.mutable_data()[2 * i] = 1.0;
  eqcl::Expr dx = eqcl::Tangent(net.loss, net.x, direction);
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::GradParams(dx, net.bindings));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Tangent)->RangeMultiplier(4)->Range(64, 4096);

void BM_FiniteDiffCheck(benchmark::State& state) {
  TwoLayer net(64);
  for (auto _ : state) benchmark::DoNotOptimize(eqcl::FiniteDiffCheck(net.loss, net.bindings, 1e-5));
}
BENCHMARK(BM_FiniteDiffCheck)->Unit(benchmark::kMillisecond);

}  // namespace
