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


#ifndef EQCL_TOOLS_CONFIG_H_
#define EQCL_TOOLS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "eqcl/solver.h"

namespace eqcl::cli {

enum class Experiment { kQpEq, kQpIneq, kQpPerturb, kFairness, kBvp, kClasswise, kCustom };

Experiment ParseExperiment(const std::string& name);
const char* ExperimentName(Experiment e);

// A fully resolved run: every default filled in, every path absolute, random
// QP instances expanded to explicit matrices. Serializing it back with
// ToJson() and running that file reproduces the trajectory byte for byte.
struct RunConfig {
  Experiment experiment = Experiment::kQpEq;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  SolverConfig solver;
  // Experiment parameters, already merged with their defaults.
  nlohmann::json problem;

  nlohmann::json ToJson() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
};

// Reads and resolves a config file. Relative paths inside it are taken
// relative to the file's directory. Throws ValidationError on anything
// missing, unknown or malformed.
RunConfig LoadRunConfig(const std::filesystem::path& path, const Overrides& overrides);
RunConfig ResolveRunConfig(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides);

nlohmann::json SolverToJson(const SolverConfig& c);

}  // namespace eqcl::cli

#endif  // EQCL_TOOLS_CONFIG_H_
