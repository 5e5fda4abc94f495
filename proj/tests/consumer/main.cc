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

#include <cmath>
#include <cstdio>

#include "eqcl/qp_oracle.h"

// min 1/2 |w|^2 s.t. w_0 = 2 has mu = -2. Deliberately compiled without the
// library's architecture flags.
int main() {
  Eigen::MatrixXd X(1, 2);
  X << 1.0, 0.0;
  Eigen::VectorXd y(1);
  y << 2.0;
  const eqcl::QpSolution s = eqcl::SolveEqQp(X, y);
  if (std::abs(s.mu[0] + 2.0) > 1e-12) {
    std::printf("unexpected mu %g\n", s.mu[0]);
    return 1;
  }
  std::printf("consumer ok\n");
  return 0;
}
