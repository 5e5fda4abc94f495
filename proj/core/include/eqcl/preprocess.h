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

#ifndef EQCL_PREPROCESS_H_
#define EQCL_PREPROCESS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "eqcl/constraints.h"
#include "eqcl/csv.h"
#include "eqcl/tensor.h"

namespace eqcl {

// Encoded samples with labels and protected-group ids.
struct TabularDataset {
  Tensor features = Tensor::Zeros({0, 1});
  std::vector<double> labels;
  std::vector<int> groups;
  std::vector<std::string> feature_names;
  std::vector<std::string> group_names;

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return features.shape()[1]; }
  Batch ToBatch() const;
  friend bool operator==(const TabularDataset&, const TabularDataset&) = default;
};

enum class Encoding { kOneHot, kBinary, kBins, kQuantileBins, kNumeric };

struct FeatureSpec {
  std::string column;
  Encoding encoding = Encoding::kOneHot;
  std::string positive;       // kBinary: level encoded as 1
  std::vector<double> edges;  // kBins: e0 < e1 < ... < em
  int bins = 5;               // kQuantileBins
};

struct RangeFilter {
  std::string column;
  double min = 0.0;
  double max = 0.0;
};

struct PreprocessSchema {
  std::vector<RangeFilter> filters;
  // Columns that must be present; everything else is ignored.
  std::vector<std::string> keep;
  std::map<std::string, std::map<std::string, std::string>> recode;
  std::string target;
  std::string positive_label = "1";
  std::string group;
  std::vector<FeatureSpec> features;
  double train_fraction = 0.7;

  void Validate() const;
};

// Parses the JSON schema format documented in the README.
PreprocessSchema ParseSchema(const std::string& json_text);
PreprocessSchema LoadSchema(const std::filesystem::path& path);

struct PreprocessResult {
  TabularDataset train;
  TabularDataset test;
  // One message per dropped test row (unseen categorical level).
  std::vector<std::string> dropped;
};

// filter -> recode -> split -> fit encoders on train -> encode both splits.
// Bins are right-closed (e_i, e_{i+1}] with the first bin also holding e0;
// values beyond the outer edges fall into the end bins.
PreprocessResult Preprocess(const CsvTable& table, const PreprocessSchema& schema,
                            std::uint64_t seed);
PreprocessResult LoadAndPreprocess(const std::filesystem::path& csv,
                                   const PreprocessSchema& schema, std::uint64_t seed);

// Index of the bin holding `value` given the interior edges (sorted).
std::size_t BinIndex(double value, const std::vector<double>& interior_edges);

// Interior cut points of `bins` equal-mass bins over `values` (linear
// interpolation between order statistics), deduplicated.
std::vector<double> QuantileEdges(std::vector<double> values, int bins);

// Seeded Fisher-Yates permutation of 0..n-1, identical on every platform.
std::vector<std::size_t> SeededPermutation(std::size_t n, std::uint64_t seed);

}  // namespace eqcl

#endif  // EQCL_PREPROCESS_H_
