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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "eqcl/error.h"

namespace eqcl {

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string TrajectoryCsv(const Trajectory& trajectory) {
  std::ostringstream out;
  out << "step,lagrangian,objective";
  for (const auto& l : trajectory.constraint_labels) out << ",slack_" << l;
  for (const auto& l : trajectory.inequality_labels) out << ",lambda_" << l;
  for (const auto& l : trajectory.equality_labels) out << ",mu_" << l;
  out << ",avg_lagrangian\n";
  for (const auto& s : trajectory.steps) {
    out << s.step << ',' << FormatDouble(s.lagrangian) << ','
        << FormatDouble(s.objective);
    for (double v : s.slacks) out << ',' << FormatDouble(v);
    for (double v : s.lambda) out << ',' << FormatDouble(v);
    for (double v : s.mu) out << ',' << FormatDouble(v);
    out << ',' << FormatDouble(s.avg_lagrangian) << '\n';
  }
  return out.str();
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into place at " + path.string());
  }
}

void WriteTrajectoryCsv(const Trajectory& trajectory, const std::filesystem::path& path) {
  WriteFileAtomic(path, TrajectoryCsv(trajectory));
}

}  // namespace eqcl
