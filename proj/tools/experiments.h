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


#ifndef EQCL_TOOLS_EXPERIMENTS_H_
#define EQCL_TOOLS_EXPERIMENTS_H_

#include "config.h"
#include "json.hpp"

namespace eqcl::cli {

// Runs one resolved config and writes resolved_config.json, trajectory.csv,
// metrics.json and any experiment-specific CSVs into config.output_dir, each
// through an atomic rename. Returns the metrics that were written.
nlohmann::json RunExperiment(const RunConfig& config);

// Closed-form oracle for the config's QP (qp_eq, qp_ineq or qp_perturb).
nlohmann::json QpOracleReport(const RunConfig& config);

}  // namespace eqcl::cli

#endif  // EQCL_TOOLS_EXPERIMENTS_H_
