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


#ifndef EQCL_TOOLS_VERIFY_H_
#define EQCL_TOOLS_VERIFY_H_

#include <cstdint>
#include <string>

namespace eqcl::cli {

// Runs a named property suite (gradients, qp, perturbation, equivalence),
// prints one row per check and returns true iff every row passed. Throws
// ValidationError for an unknown suite.
bool RunVerifySuite(const std::string& suite, std::uint64_t seed);

}  // namespace eqcl::cli

#endif  // EQCL_TOOLS_VERIFY_H_
