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

#ifndef EQCL_QP_ORACLE_H_
#define EQCL_QP_ORACLE_H_

#include <Eigen/Dense>

namespace eqcl {

// Minimum-norm interpolation family: min 1/2 ||w||^2 subject to
//   Xw = y                       (equality)
//   1/2 ||Xw - y||^2 <= eps      (inequality)
//   -eps <= Xw - y <= eps        (box, rowwise)
// X is m x n with XX^T full rank.
struct QpInstance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double eps = 0.0;
};

enum class QpKind { kEquality, kInequality, kBox };

struct QpSolution {
  QpKind kind = QpKind::kEquality;
  Eigen::VectorXd w;
  Eigen::VectorXd mu;        // equality multipliers
  double lambda = 0.0;       // inequality multiplier
  Eigen::VectorXd mu_plus;   // box: upper faces, Xw - y <= eps
  Eigen::VectorXd mu_minus;  // box: lower faces, -(Xw - y) <= eps
  double objective = 0.0;
  double residual = 0.0;     // ||Xw - y||_2
  int iterations = 0;        // bisection steps (inequality)

  // ||gamma||_1 over whichever multipliers the kind carries.
  double DualL1() const;
};

struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double Max() const;
};

// Throws ValidationError unless the minimum singular value of XX^T exceeds
// 1e-10 and the shapes agree.
void RequireFullRank(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// mu = -(XX^T)^{-1} y, w = -X^T mu.
QpSolution SolveEqQp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Inactive when 1/2 ||y||^2 <= eps (w = 0, lambda = 0). Otherwise finds
// c = 1/lambda with 1/2 ||Xw(c) - y||^2 = eps, w(c) = (cI + X^T X)^{-1} X^T y,
// by geometric bisection. Throws NumericalError if no bracket is found.
QpSolution SolveIneqQp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eps);

// Brute force over the 3^m face patterns; m <= 12.
QpSolution SolveBoxQp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eps);

KktReport KktResiduals(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double eps,
                       const QpSolution& sol);

struct PerturbationReport {
  double p0 = 0.0;
  double p_eps = 0.0;
  double gap = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool holds = false;
};

// gap = P0 - P_eps against eps ||gamma_eps||_1 <= gap <= eps ||gamma_0||_1.
PerturbationReport PerturbationCheck(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double eps);

}  // namespace eqcl

#endif  // EQCL_QP_ORACLE_H_
