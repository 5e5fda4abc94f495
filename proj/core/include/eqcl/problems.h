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

#ifndef EQCL_PROBLEMS_H_
#define EQCL_PROBLEMS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqcl/constraints.h"
#include "eqcl/models.h"
#include "eqcl/preprocess.h"
#include "eqcl/solver.h"

namespace eqcl {

// ---- Fairness ---------------------------------------------------------------

struct GroupSpec {
  double weight = 0.5;     // share of the population
  double base_rate = 0.5;  // P(y = 1 | group)
};

// Features: `num_features` standard normals plus a one-hot group indicator.
// Labels: y ~ Bernoulli(sigmoid(signal * x_0 + b_g)) with b_g chosen so the
// group's positive rate equals its base rate.
struct SynthFairnessSpec {
  std::size_t n = 4000;
  std::vector<GroupSpec> groups = {{0.85, 0.7}, {0.15, 0.3}};
  std::size_t num_features = 5;
  double signal = 2.0;
  bool group_features = true;
};

TabularDataset SynthFairnessDataset(std::uint64_t seed, const SynthFairnessSpec& spec);

enum class FairnessMode { kUnconstrained, kExactDp, kPrescribed, kDoubleSided };
FairnessMode ParseFairnessMode(const std::string& name);
const char* FairnessModeName(FairnessMode mode);

struct FairnessOptions {
  FairnessMode mode = FairnessMode::kExactDp;
  double rate = 0.5;  // prescribed
  double eps = 0.0;   // double-sided relaxation
  double alpha = kDefaultTemperature;
};

// Logistic model, cross-entropy objective over the full dataset, and one
// constraint per group (two per group in double-sided mode).
Problem BuildFairnessProblem(const TabularDataset& data, const FairnessOptions& options);

// Fraction of each group predicted positive (f > 0.5 strictly).
std::vector<double> HardGroupRates(const Model& model, const TabularDataset& data);
// max - min; throws ValidationError on an empty list.
double Disparity(std::span<const double> rates);
double Accuracy(const Model& model, const TabularDataset& data);

// ---- Minimum-norm interpolation ----------------------------------------------

// Linear model without bias, objective 1/2 ||w||^2, equality x_j^T w = y_j
// per row. Flagged for the closed-form oracle.
Problem BuildQpProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
// Single inequality 1/2 ||Xw - y||^2 - eps <= 0.
Problem BuildQpIneqProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double eps);
Tensor ToTensor(const Eigen::MatrixXd& m);

// ---- Convection ----------------------------------------------------------------

struct CollocationSet {
  Tensor interior = Tensor::Zeros({0, 2});   // (x, t)
  Tensor boundary = Tensor::Zeros({0, 1});   // t
  Tensor initial = Tensor::Zeros({0, 1});    // x
};

CollocationSet SampleCollocation(std::size_t n_pde, std::size_t n_bc, std::size_t n_ic,
                                 std::uint64_t seed, const PdeDomain& domain = {});

// Solver sampler over streams "pde", "bc", "ic". Dynamic mode draws a fresh
// set per step from a seed derived from (seed, step).
Sampler CollocationSampler(std::size_t n_pde, std::size_t n_bc, std::size_t n_ic,
                           bool dynamic, const PdeDomain& domain = {});

struct ConvectionOptions {
  double beta = 1.0;
  ModelSpec model = {ModelKind::kMlp, 2, 1, {50, 50, 50, 50}};
  double alpha_reg = 0.0;
  std::size_t n_pde = 1000;
  std::size_t n_bc = 1000;
  std::size_t n_ic = 1000;
  bool dynamic = true;
  PdeDomain domain;
};

Problem BuildConvectionProblem(const ConvectionOptions& options);

double ConvectionTruth(double x, double t, double beta);
// nx * nt points (x, t) on the closed domain, x varying slowest.
Tensor EvaluationGrid(std::size_t nx, std::size_t nt, const PdeDomain& domain = {});
// sqrt(sum (pred - truth)^2 / sum truth^2); throws on zero-norm truth.
double RelativeL2(std::span<const double> pred, std::span<const double> truth);
// Relative L2 of `model` against sin(x - beta t) on an nx x nt grid.
double ConvectionError(const Model& model, double beta, std::size_t nx, std::size_t nt,
                       const PdeDomain& domain = {});

// ---- Classwise interpolation ---------------------------------------------------

// K Gaussian classes in `dim` dimensions. For class k a fraction noise[k] of
// the samples labelled k take their features from another class.
struct ClasswiseSpec {
  std::size_t per_class = 40;
  std::size_t dim = 200;
  std::vector<double> noise = {0.0, 0.05, 0.15};
  double separation = 4.0;
};

TabularDataset SynthClasswiseDataset(std::uint64_t seed, const ClasswiseSpec& spec);

// Linear K-way classifier, objective (alpha/2) ||theta||^2 and one
// softmax cross-entropy equality constraint per class.
Problem BuildClasswiseProblem(const TabularDataset& data, double alpha_reg);

}  // namespace eqcl

#endif  // EQCL_PROBLEMS_H_
