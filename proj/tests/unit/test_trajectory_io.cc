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

#include "eqcl/trajectory_io.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "eqcl/csv.h"
#include "eqcl/error.h"

using namespace eqcl;

namespace {

Trajectory Sample() {
  Trajectory t;
  t.constraint_labels = {"a", "b"};
  t.inequality_labels = {"a"};
  t.equality_labels = {"b"};
  t.steps.push_back({.step = 1,
                     .lagrangian = 0.1,
                     .objective = 1.0 / 3.0,
                     .slacks = {-0.5, 2.0},
                     .lambda = {0.0},
                     .mu = {0.02},
                     .avg_lagrangian = 0.1});
  t.steps.push_back({.step = 2,
                     .lagrangian = -1e-300,
                     .objective = 7.0,
                     .slacks = {0.25, 1.0},
                     .lambda = {0.025},
                     .mu = {0.03},
                     .avg_lagrangian = 0.05});
  return t;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("17 significant digits round-trip every double") {
  for (double v : {1.0 / 3.0, -1e-300, 6.02214076e23, 0.1, 0.0}) {
    CHECK(std::stod(FormatDouble(v)) == v);
  }
  CHECK(FormatDouble(0.5) == "0.5");
}

TEST_CASE("trajectory csv layout") {
  const std::string csv = TrajectoryCsv(Sample());
  const CsvTable t = ParseCsv(csv);
  CHECK(t.header == std::vector<std::string>{"step", "lagrangian", "objective", "slack_a",
                                             "slack_b", "lambda_a", "mu_b",
                                             "avg_lagrangian"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "1");
  CHECK(std::stod(t.rows[0][2]) == 1.0 / 3.0);
  CHECK(std::stod(t.rows[1][1]) == -1e-300);
  CHECK(std::stod(t.rows[1][5]) == 0.025);
}

TEST_CASE("atomic writes leave no temporary file") {
  const auto dir = std::filesystem::temp_directory_path() / "eqcl_traj_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "trajectory.csv";
  WriteTrajectoryCsv(Sample(), path);
  CHECK(Slurp(path) == TrajectoryCsv(Sample()));
  WriteFileAtomic(path, "replaced\n");
  CHECK(Slurp(path) == "replaced\n");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    CHECK(e.path().filename() == "trajectory.csv");
  }
  CHECK_THROWS_AS(WriteFileAtomic(dir / "no_such_dir" / "x.csv", "x"), Error);
  std::filesystem::remove_all(dir);
}
