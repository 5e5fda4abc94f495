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

#include "eqcl/csv.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "eqcl/error.h"

namespace eqcl {

std::size_t CsvTable::Column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::HasColumn(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          record.push_back(std::move(field));
          records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        any = false;
        break;
      default:
        field += ch;
        any = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field in CSV");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw ValidationError("empty CSV");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ValidationError("CSV row " + std::to_string(r + 1) + " has " +
                            std::to_string(records[r].size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable ReadCsv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open CSV file " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return ParseCsv(buf.str());
}

}  // namespace eqcl
