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

#ifndef EQCL_CSV_H_
#define EQCL_CSV_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eqcl {

// Comma-separated table with a header row. Quoted fields may contain commas,
// doubled quotes and newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ValidationError naming the column when absent.
  std::size_t Column(const std::string& name) const;
  bool HasColumn(const std::string& name) const;
};

// Throws ValidationError on empty input or ragged rows.
CsvTable ParseCsv(std::string_view text);
CsvTable ReadCsv(const std::filesystem::path& path);

}  // namespace eqcl

#endif  // EQCL_CSV_H_
