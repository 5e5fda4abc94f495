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

#ifndef EQCL_TESTS_ORACLES_H_
#define EQCL_TESTS_ORACLES_H_

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace eqcl::testing {

// Central differences of a scalar function of a flat vector.
inline std::vector<double> CentralGradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double MaxRelError(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / (std::abs(a[i]) + 1e-12));
  }
  return worst;
}

// Inequality QP multiplier by bisection on lambda directly:
// w(lambda) = (I + lambda X^T X)^{-1} lambda X^T y, residual decreasing in lambda.
inline double BisectLambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double eps) {
  const auto n = X.cols();
  auto residual = [&](double lam) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + lam * X.transpose() * X;
    const Eigen::VectorXd w = a.partialPivLu().solve(lam * X.transpose() * y);
    return 0.5 * (X * w - y).squaredNorm();
  };
  if (residual(0.0) <= eps) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (residual(hi) > eps) hi *= 2.0;
  for (int i = 0; i < 300 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > eps ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Box QP with diagonal X = diag(d): coordinatewise clipping.
struct DiagonalBoxSolution {
  Eigen::VectorXd w;
  double objective = 0.0;
  double dual_l1 = 0.0;
};

inline DiagonalBoxSolution ClipDiagonal(const Eigen::VectorXd& d, const Eigen::VectorXd& y,
                                        double eps) {
  DiagonalBoxSolution s;
  s.w = Eigen::VectorXd::Zero(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double mag = std::max(std::abs(y[i]) - eps, 0.0);
    s.w[i] = (y[i] >= 0 ? mag : -mag) / d[i];
    // Stationarity w_i = -d_i nu_i.
    s.dual_l1 += std::abs(s.w[i] / d[i]);
  }
  s.objective = 0.5 * s.w.squaredNorm();
  return s;
}

inline std::vector<double> Ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double Spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = Ranks(a), rb = Ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// Random n x n matrix with cond(XX^T) <= max_cond, by rejection.
inline Eigen::MatrixXd WellConditioned(std::mt19937_64& rng, int n, double max_cond) {
  std::normal_distribution<double> normal;
  for (;;) {
    Eigen::MatrixXd X(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) X(r, c) = normal(rng);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
    const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo <= max_cond) return X;
  }
}

inline Eigen::VectorXd RandomVector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace eqcl::testing

#endif  // EQCL_TESTS_ORACLES_H_
