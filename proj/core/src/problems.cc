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

#include "eqcl/problems.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "eqcl/error.h"
#include "random.h"

namespace eqcl {
namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// E[sigmoid(a z + b)] for z ~ N(0, 1), trapezoid rule on [-10, 10].
double ExpectedSigmoid(double a, double b) {
  constexpr int kPoints = 4001;
  constexpr double kLo = -10.0, kHi = 10.0;
  const double h = (kHi - kLo) / (kPoints - 1);
  double s = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double z = kLo + h * i;
    const double w = (i == 0 || i == kPoints - 1) ? 0.5 : 1.0;
    s += w * Sigmoid(a * z + b) * std::exp(-0.5 * z * z);
  }
  return s * h / std::sqrt(2.0 * 3.141592653589793);
}

// Offset b with E[sigmoid(a z + b)] = rate.
double OffsetForRate(double a, double rate) {
  double lo = -60.0, hi = 60.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ExpectedSigmoid(a, mid) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Expr Row(const Expr& outputs, std::size_t j) { return GatherRows(outputs, {j}); }

}  // namespace

// ---- Fairness ---------------------------------------------------------------

TabularDataset SynthFairnessDataset(std::uint64_t seed, const SynthFairnessSpec& spec) {
  const std::size_t g = spec.groups.size();
  if (g < 2) throw ValidationError("synthetic fairness data needs at least two groups");
  if (spec.n == 0 || spec.num_features == 0) {
    throw ValidationError("synthetic fairness data needs n > 0 and features > 0");
  }
  double total = 0.0;
  for (const auto& gs : spec.groups) {
    if (!(gs.weight > 0.0)) throw ValidationError("group weights must be positive");
    if (!(gs.base_rate > 0.0 && gs.base_rate < 1.0)) {
      throw ValidationError("base rates must lie in (0, 1)");
    }
    total += gs.weight;
  }
  std::vector<double> offsets;
  for (const auto& gs : spec.groups) offsets.push_back(OffsetForRate(spec.signal, gs.base_rate));

  std::mt19937_64 rng(seed);
  TabularDataset ds;
  const std::size_t d = spec.num_features + (spec.group_features ? g : 0);
  std::vector<double> data;
  data.reserve(spec.n * d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double u = internal::Uniform01(rng) * total;
    std::size_t grp = 0;
    while (grp + 1 < g && u >= spec.groups[grp].weight) {
      u -= spec.groups[grp].weight;
      ++grp;
    }
    std::vector<double> x(spec.num_features);
    for (double& v : x) v = internal::Normal(rng);
    const double p = Sigmoid(spec.signal * x[0] + offsets[grp]);
    const double y = internal::Uniform01(rng) < p ? 1.0 : 0.0;
    data.insert(data.end(), x.begin(), x.end());
    if (spec.group_features) {
      for (std::size_t k = 0; k < g; ++k) data.push_back(k == grp ? 1.0 : 0.0);
    }
    ds.labels.push_back(y);
    ds.groups.push_back(static_cast<int>(grp));
  }
  for (std::size_t k = 0; k < g; ++k) {
    if (std::find(ds.groups.begin(), ds.groups.end(), static_cast<int>(k)) ==
        ds.groups.end()) {
      throw ValidationError("group " + std::to_string(k) + " drew no samples");
    }
  }
  ds.features = Tensor::Matrix(spec.n, d, std::move(data));
  for (std::size_t k = 0; k < spec.num_features; ++k) {
    ds.feature_names.push_back("x" + std::to_string(k));
  }
  for (std::size_t k = 0; k < g; ++k) {
    ds.group_names.push_back("g" + std::to_string(k));
    if (spec.group_features) ds.feature_names.push_back("group=g" + std::to_string(k));
  }
  return ds;
}

FairnessMode ParseFairnessMode(const std::string& name) {
  if (name == "unconstrained") return FairnessMode::kUnconstrained;
  if (name == "exact_dp") return FairnessMode::kExactDp;
  if (name == "prescribed") return FairnessMode::kPrescribed;
  if (name == "double_sided") return FairnessMode::kDoubleSided;
  throw ValidationError("unknown fairness mode '" + name + "'");
}

const char* FairnessModeName(FairnessMode mode) {
  switch (mode) {
    case FairnessMode::kUnconstrained: return "unconstrained";
    case FairnessMode::kExactDp: return "exact_dp";
    case FairnessMode::kPrescribed: return "prescribed";
    case FairnessMode::kDoubleSided: return "double_sided";
  }
  return "?";
}

Problem BuildFairnessProblem(const TabularDataset& data, const FairnessOptions& options) {
  if (data.size() == 0) throw ValidationError("empty dataset");
  const Batch population = data.ToBatch();
  Problem p;
  p.name = std::string("fairness/") + FairnessModeName(options.mode);
  p.model = {ModelKind::kLogistic, data.num_features(), 1, {}, true, OutputSquash::kNone};
  p.objective.stream = "population";
  p.objective.loss = [](const ForwardFn& forward, const Batch& batch) {
    return Mean(BinaryCrossEntropy(forward(Constant(batch.features)), batch));
  };
  const int groups = static_cast<int>(data.group_names.size());
  for (int k = 0; k < groups; ++k) {
    switch (options.mode) {
      case FairnessMode::kUnconstrained:
        break;
      case FairnessMode::kExactDp:
      case FairnessMode::kDoubleSided:
        p.constraints.push_back(MakeDpConstraint(population, k, options.alpha));
        break;
      case FairnessMode::kPrescribed:
        p.constraints.push_back(
            MakePrescribedRateConstraint(population, k, options.rate, options.alpha));
        break;
    }
  }
  p.sampler = FixedStreams({{"population", population}});
  if (options.mode == FairnessMode::kDoubleSided) return ToDoubleSided(p, options.eps);
  return p;
}

std::vector<double> HardGroupRates(const Model& model, const TabularDataset& data) {
  const Tensor f = Predict(model, data.features);
  const std::size_t g = data.group_names.size();
  std::vector<double> pos(g, 0.0), count(g, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto k = static_cast<std::size_t>(data.groups[i]);
    count[k] += 1.0;
    if (f[i] > 0.5) pos[k] += 1.0;
  }
  std::vector<double> rates(g);
  for (std::size_t k = 0; k < g; ++k) {
    if (count[k] == 0.0) {
      throw ValidationError("group '" + data.group_names[k] + "' is empty");
    }
    rates[k] = pos[k] / count[k];
  }
  return rates;
}

double Disparity(std::span<const double> rates) {
  if (rates.empty()) throw ValidationError("disparity of no groups");
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  return *hi - *lo;
}

double Accuracy(const Model& model, const TabularDataset& data) {
  if (data.size() == 0) throw ValidationError("accuracy of an empty dataset");
  const Tensor f = Predict(model, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double pred = f[i] > 0.5 ? 1.0 : 0.0;
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ---- Minimum-norm interpolation ----------------------------------------------

Tensor ToTensor(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return Tensor::Matrix(static_cast<std::size_t>(m.rows()),
                        static_cast<std::size_t>(m.cols()), std::move(data));
}

Problem BuildQpProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0) {
    throw ValidationError("QP data shapes disagree");
  }
  Problem p;
  p.name = "qp_eq";
  p.model = {ModelKind::kLinear, static_cast<std::size_t>(X.cols()), 1, {}, false,
             OutputSquash::kNone};
  p.objective.l2_weight = 1.0;
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    const double target = y[j];
    const auto row = static_cast<std::size_t>(j);
    p.constraints.push_back(
        {ConstraintKind::kEquality, "row" + std::to_string(j), "rows",
         [row, target](const ForwardFn& forward, const Batch& batch) {
           return Row(forward(Constant(batch.features)), row) - target;
         }});
  }
  Batch rows;
  rows.features = ToTensor(X);
  p.sampler = FixedStreams({{"rows", std::move(rows)}});
  p.quadratic_affine = true;
  return p;
}

Problem BuildQpIneqProblem(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double eps) {
  if (!(eps > 0.0)) throw ValidationError("inequality QP needs eps > 0");
  Problem p = BuildQpProblem(X, y);
  p.name = "qp_ineq";
  p.constraints.clear();
  const Tensor targets = Tensor::Column(std::vector<double>(y.data(), y.data() + y.size()));
  p.constraints.push_back(
      {ConstraintKind::kInequality, "residual", "rows",
       [targets, eps](const ForwardFn& forward, const Batch& batch) {
         return 0.5 * Sum(Square(forward(Constant(batch.features)) - Constant(targets))) -
                eps;
       }});
  p.quadratic_affine = false;
  return p;
}

// ---- Convection ----------------------------------------------------------------

CollocationSet SampleCollocation(std::size_t n_pde, std::size_t n_bc, std::size_t n_ic,
                                 std::uint64_t seed, const PdeDomain& domain) {
  if (n_pde == 0 || n_bc == 0 || n_ic == 0) {
    throw ValidationError("collocation counts must be positive");
  }
  std::mt19937_64 rng(seed);
  CollocationSet s;
  std::vector<double> interior(2 * n_pde), boundary(n_bc), initial(n_ic);
  for (std::size_t i = 0; i < n_pde; ++i) {
    interior[2 * i] = internal::Uniform(rng, domain.x_min, domain.x_max);
    interior[2 * i + 1] = internal::Uniform(rng, domain.t_min, domain.t_max);
  }
  for (double& t : boundary) t = internal::Uniform(rng, domain.t_min, domain.t_max);
  for (double& x : initial) x = internal::Uniform(rng, domain.x_min, domain.x_max);
  s.interior = Tensor::Matrix(n_pde, 2, std::move(interior));
  s.boundary = Tensor::Matrix(n_bc, 1, std::move(boundary));
  s.initial = Tensor::Matrix(n_ic, 1, std::move(initial));
  return s;
}

Sampler CollocationSampler(std::size_t n_pde, std::size_t n_bc, std::size_t n_ic,
                           bool dynamic, const PdeDomain& domain) {
  auto make = [=](std::uint64_t seed) {
    CollocationSet c = SampleCollocation(n_pde, n_bc, n_ic, seed, domain);
    auto streams = std::make_shared<Streams>();
    (*streams)["pde"].features = std::move(c.interior);
    (*streams)["bc"].features = std::move(c.boundary);
    (*streams)["ic"].features = std::move(c.initial);
    return std::shared_ptr<const Streams>(std::move(streams));
  };
  if (dynamic) {
    return [make](std::uint64_t seed, std::size_t step) {
      return make(internal::DeriveSeed(seed, step));
    };
  }
  // Static: one set per seed, cached for the common single-seed case.
  auto cache = std::make_shared<std::pair<std::uint64_t, std::shared_ptr<const Streams>>>();
  return [make, cache](std::uint64_t seed, std::size_t) {
    if (!cache->second || cache->first != seed) *cache = {seed, make(internal::DeriveSeed(seed, 0))};
    return cache->second;
  };
}

Problem BuildConvectionProblem(const ConvectionOptions& options) {
  options.model.Validate();
  if (options.model.input_size != 2 || options.model.output_size != 1) {
    throw ValidationError("convection model must map (x, t) to a scalar");
  }
  if (!(options.alpha_reg >= 0.0)) throw ValidationError("alpha_reg must be >= 0");
  Problem p;
  p.name = "convection";
  p.model = options.model;
  p.objective.l2_weight = options.alpha_reg;
  p.constraints = MakePdeConstraints(options.beta, options.domain);
  p.sampler = CollocationSampler(options.n_pde, options.n_bc, options.n_ic,
                                 options.dynamic, options.domain);
  return p;
}

double ConvectionTruth(double x, double t, double beta) { return std::sin(x - beta * t); }

Tensor EvaluationGrid(std::size_t nx, std::size_t nt, const PdeDomain& domain) {
  if (nx < 2 || nt < 2) throw ValidationError("grid needs at least 2 points per axis");
  std::vector<double> data;
  data.reserve(2 * nx * nt);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = domain.x_min + (domain.x_max - domain.x_min) * static_cast<double>(i) /
                                        static_cast<double>(nx - 1);
    for (std::size_t j = 0; j < nt; ++j) {
      const double t = domain.t_min + (domain.t_max - domain.t_min) *
                                          static_cast<double>(j) /
                                          static_cast<double>(nt - 1);
      data.push_back(x);
      data.push_back(t);
    }
  }
  return Tensor::Matrix(nx * nt, 2, std::move(data));
}

double RelativeL2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ValidationError("grid sizes differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw ValidationError("relative L2 against a zero-norm truth");
  return std::sqrt(num / den);
}

double ConvectionError(const Model& model, double beta, std::size_t nx, std::size_t nt,
                       const PdeDomain& domain) {
  const Tensor grid = EvaluationGrid(nx, nt, domain);
  const Tensor pred = Predict(model, grid);
  std::vector<double> truth(nx * nt);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = ConvectionTruth(grid.at(i, 0), grid.at(i, 1), beta);
  }
  return RelativeL2(pred.data(), truth);
}

// ---- Classwise interpolation ---------------------------------------------------

TabularDataset SynthClasswiseDataset(std::uint64_t seed, const ClasswiseSpec& spec) {
  const std::size_t k = spec.noise.size();
  if (k < 2) throw ValidationError("classwise data needs at least two classes");
  if (spec.dim < k || spec.per_class == 0) {
    throw ValidationError("classwise data needs dim >= classes and per_class > 0");
  }
  for (double p : spec.noise) {
    if (!(p >= 0.0 && p < 1.0)) throw ValidationError("noise levels must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  TabularDataset ds;
  std::vector<double> data;
  for (std::size_t c = 0; c < k; ++c) {
    const auto noisy = static_cast<std::size_t>(
        std::llround(spec.noise[c] * static_cast<double>(spec.per_class)));
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      std::size_t source = c;
      if (i < noisy) {
        source = static_cast<std::size_t>(internal::UniformIndex(rng, k - 1));
        if (source >= c) ++source;
      }
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double mean = j == source ? spec.separation : 0.0;
        data.push_back(mean + internal::Normal(rng));
      }
      ds.labels.push_back(static_cast<double>(c));
      ds.groups.push_back(static_cast<int>(c));
    }
  }
  const std::size_t n = k * spec.per_class;
  ds.features = Tensor::Matrix(n, spec.dim, std::move(data));
  for (std::size_t j = 0; j < spec.dim; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (std::size_t c = 0; c < k; ++c) ds.group_names.push_back("class" + std::to_string(c));
  return ds;
}

Problem BuildClasswiseProblem(const TabularDataset& data, double alpha_reg) {
  if (data.size() == 0) throw ValidationError("empty dataset");
  if (!(alpha_reg >= 0.0)) throw ValidationError("alpha_reg must be >= 0");
  int classes = 0;
  for (double y : data.labels) classes = std::max(classes, static_cast<int>(y) + 1);
  if (classes < 2) throw ValidationError("classwise problem needs at least two classes");
  const Batch train = data.ToBatch();
  Problem p;
  p.name = "classwise";
  p.model = {ModelKind::kLinear, data.num_features(), static_cast<std::size_t>(classes),
             {}, true, OutputSquash::kNone};
  p.objective.l2_weight = alpha_reg;
  for (int c = 0; c < classes; ++c) {
    p.constraints.push_back(MakeClasswiseConstraint(train, c, SoftmaxCrossEntropy));
  }
  p.sampler = FixedStreams({{"train", train}});
  return p;
}

}  // namespace eqcl
