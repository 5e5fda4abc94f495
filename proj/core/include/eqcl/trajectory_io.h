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

#ifndef EQCL_TRAJECTORY_IO_H_
#define EQCL_TRAJECTORY_IO_H_

#include <filesystem>
#include <string>

#include "eqcl/solver.h"

namespace eqcl {

// %.17g, so doubles round-trip exactly.
std::string FormatDouble(double v);

// CSV text with header
// step,lagrangian,objective,slack_<label>...,lambda_<label>...,mu_<label>...,avg_lagrangian
std::string TrajectoryCsv(const Trajectory& trajectory);

// Writes `content` to a sibling temporary file, then renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);

void WriteTrajectoryCsv(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace eqcl

#endif  // EQCL_TRAJECTORY_IO_H_
