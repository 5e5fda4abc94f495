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

#include "eqcl/qp_oracle.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "eqcl/error.h"

namespace eqcl {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kRankTol = 1e-10;
constexpr int kMaxBoxRows = 12;

VectorXd Solve(const MatrixXd& a, const VectorXd& b) {
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace

double QpSolution::DualL1() const {
  switch (kind) {
    case QpKind::kEquality:
      return mu.lpNorm<1>();
    case QpKind::kInequality:
      return std::abs(lambda);
    case QpKind::kBox:
      return mu_plus.lpNorm<1>() + mu_minus.lpNorm<1>();
  }
  return 0.0;
}

double KktReport::Max() const {
  return std::max({stationarity, primal, dual, complementarity});
}

void RequireFullRank(const MatrixXd& X, const VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) throw ValidationError("empty design matrix");
  if (X.rows() != y.size()) {
    throw ValidationError("X has " + std::to_string(X.rows()) + " rows but y has " +
                          std::to_string(y.size()) + " entries");
  }
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("non-finite QP data");
  const MatrixXd gram = X * X.transpose();
  const Eigen::JacobiSVD<MatrixXd> svd(gram);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > kRankTol)) {
    std::ostringstream msg;
    msg << "XX^T is rank deficient (min singular value " << smin << ")";
    throw ValidationError(msg.str());
  }
}

QpSolution SolveEqQp(const MatrixXd& X, const VectorXd& y) {
  RequireFullRank(X, y);
  QpSolution s;
  s.kind = QpKind::kEquality;
  s.mu = -Solve(X * X.transpose(), y);
  s.w = -X.transpose() * s.mu;
  s.objective = 0.5 * s.w.squaredNorm();
  s.residual = (X * s.w - y).norm();
  return s;
}

QpSolution SolveIneqQp(const MatrixXd& X, const VectorXd& y, double eps) {
  if (!(eps > 0.0)) throw ValidationError("inequality QP needs eps > 0");
  RequireFullRank(X, y);
  QpSolution s;
  s.kind = QpKind::kInequality;
  const auto n = X.cols();
  if (0.5 * y.squaredNorm() <= eps) {
    s.w = VectorXd::Zero(n);
    s.lambda = 0.0;
    s.objective = 0.0;
    s.residual = y.norm();
    return s;
  }
  // Minimum-norm interpolant and the spectrum of X^T X.
  const VectorXd w0 = X.transpose() * Solve(X * X.transpose(), y);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(X.transpose() * X);
  const VectorXd sigma = eig.eigenvalues().cwiseMax(0.0);
  const VectorXd q = eig.eigenvectors().transpose() * w0;
  auto constraint = [&](double c) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      const double r = c / (c + sigma[i]);
      g += r * r * sigma[i] * q[i] * q[i];
    }
    return 0.5 * g;
  };

  double lo = 1e-12, hi = 1.0;
  if (constraint(lo) >= eps) {
    std::ostringstream msg;
    msg << "bisection bracket failure: constraint(" << lo << ") = " << constraint(lo)
        << " >= eps = " << eps;
    throw NumericalError(msg.str());
  }
  int doublings = 0;
  while (constraint(hi) <= eps) {
    hi *= 2.0;
    if (++doublings > 2000 || !std::isfinite(hi)) {
      std::ostringstream msg;
      msg << "bisection bracket failure: constraint(" << hi << ") = " << constraint(hi)
          << " <= eps = " << eps << " after " << doublings << " doublings";
      throw NumericalError(msg.str());
    }
  }
  const double tol = 1e-12 * std::min(1.0, eps);
  double c = std::sqrt(lo * hi);
  int it = 0;
  for (; it < 4000; ++it) {
    c = std::sqrt(lo * hi);
    if (!(c > lo && c < hi)) break;
    const double g = constraint(c);
    if (std::abs(g - eps) <= tol) break;
    (g < eps ? lo : hi) = c;
  }
  s.iterations = it;
  s.lambda = 1.0 / c;
  const MatrixXd a = c * MatrixXd::Identity(n, n) + X.transpose() * X;
  s.w = Solve(a, X.transpose() * y);
  s.objective = 0.5 * s.w.squaredNorm();
  s.residual = (X * s.w - y).norm();
  return s;
}

QpSolution SolveBoxQp(const MatrixXd& X, const VectorXd& y, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("box QP needs eps >= 0");
  RequireFullRank(X, y);
  const auto m = static_cast<int>(X.rows());
  if (m > kMaxBoxRows) {
    throw ValidationError("box QP enumeration is limited to 12 rows, got " +
                          std::to_string(m));
  }
  const double scale = 1.0 + y.lpNorm<Eigen::Infinity>() + eps;
  const double tol = 1e-10 * scale;

  long patterns = 1;
  for (int i = 0; i < m; ++i) patterns *= 3;

  QpSolution best;
  best.kind = QpKind::kBox;
  bool found = false;
  std::vector<int> side(static_cast<std::size_t>(m));
  for (long p = 0; p < patterns; ++p) {
    long code = p;
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      side[static_cast<std::size_t>(i)] = static_cast<int>(code % 3) - 1;  // -1, 0, +1
      code /= 3;
      if (side[static_cast<std::size_t>(i)] != 0) active.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(active.size());
    MatrixXd xa(k, X.cols());
    VectorXd b(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const int row = active[static_cast<std::size_t>(r)];
      xa.row(r) = X.row(row);
      b[r] = y[row] + side[static_cast<std::size_t>(row)] * eps;
    }
    VectorXd nu = VectorXd::Zero(k);
    VectorXd w = VectorXd::Zero(X.cols());
    if (k > 0) {
      nu = -Solve(xa * xa.transpose(), b);
      w = -xa.transpose() * nu;
    }
    // Dual feasibility: upper faces carry nu >= 0, lower faces nu <= 0.
    bool ok = true;
    for (Eigen::Index r = 0; r < k && ok; ++r) {
      const int s = side[static_cast<std::size_t>(active[static_cast<std::size_t>(r)])];
      if (s * nu[r] < -tol) ok = false;
    }
    if (!ok) continue;
    const VectorXd resid = X * w - y;
    if (resid.lpNorm<Eigen::Infinity>() > eps + tol) continue;
    const double obj = 0.5 * w.squaredNorm();
    if (found && obj >= best.objective) continue;
    found = true;
    best.w = w;
    best.objective = obj;
    best.residual = resid.norm();
    best.mu_plus = VectorXd::Zero(m);
    best.mu_minus = VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < k; ++r) {
      const int row = active[static_cast<std::size_t>(r)];
      if (side[static_cast<std::size_t>(row)] > 0) {
        best.mu_plus[row] = std::max(0.0, nu[r]);
      } else {
        best.mu_minus[row] = std::max(0.0, -nu[r]);
      }
    }
  }
  if (!found) throw NumericalError("box QP: no face pattern satisfied the KKT system");
  return best;
}

KktReport KktResiduals(const MatrixXd& X, const VectorXd& y, double eps,
                       const QpSolution& sol) {
  KktReport r;
  const VectorXd resid = X * sol.w - y;
  switch (sol.kind) {
    case QpKind::kEquality:
      r.stationarity = (sol.w + X.transpose() * sol.mu).lpNorm<Eigen::Infinity>();
      r.primal = resid.lpNorm<Eigen::Infinity>();
      break;
    case QpKind::kInequality: {
      const double g = 0.5 * resid.squaredNorm() - eps;
      r.stationarity =
          (sol.w + sol.lambda * (X.transpose() * resid)).lpNorm<Eigen::Infinity>();
      r.primal = std::max(0.0, g);
      r.dual = std::max(0.0, -sol.lambda);
      r.complementarity = std::abs(sol.lambda * g);
      break;
    }
    case QpKind::kBox: {
      const VectorXd nu = sol.mu_plus - sol.mu_minus;
      r.stationarity = (sol.w + X.transpose() * nu).lpNorm<Eigen::Infinity>();
      for (Eigen::Index j = 0; j < resid.size(); ++j) {
        const double up = resid[j] - eps, down = -resid[j] - eps;
        r.primal = std::max({r.primal, up, down});
        r.dual = std::max({r.dual, -sol.mu_plus[j], -sol.mu_minus[j]});
        r.complementarity = std::max({r.complementarity, std::abs(sol.mu_plus[j] * up),
                                      std::abs(sol.mu_minus[j] * down)});
      }
      break;
    }
  }
  return r;
}

PerturbationReport PerturbationCheck(const MatrixXd& X, const VectorXd& y, double eps) {
  const QpSolution p0 = SolveEqQp(X, y);
  const QpSolution pe = SolveBoxQp(X, y, eps);
  PerturbationReport r;
  r.p0 = p0.objective;
  r.p_eps = pe.objective;
  r.gap = p0.objective - pe.objective;
  r.lower = eps * pe.DualL1();
  r.upper = eps * p0.DualL1();
  r.holds = r.lower <= r.gap + 1e-9 && r.gap <= r.upper + 1e-9;
  return r;
}

}  // namespace eqcl
