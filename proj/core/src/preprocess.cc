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

#include "eqcl/preprocess.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "eqcl/error.h"
#include "json.hpp"
#include "random.h"

namespace eqcl {
namespace {

using Row = std::vector<std::string>;

double ParseNumber(const std::string& s, const std::string& column) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw ValidationError("column '" + column + "': '" + s + "' is not a number");
  }
  return v;
}

Encoding ParseEncoding(const std::string& name) {
  if (name == "onehot") return Encoding::kOneHot;
  if (name == "binary") return Encoding::kBinary;
  if (name == "bins") return Encoding::kBins;
  if (name == "quantile_bins") return Encoding::kQuantileBins;
  if (name == "numeric") return Encoding::kNumeric;
  throw ValidationError("unknown encoding '" + name + "'");
}

// Encoder fitted on the training split.
struct FittedFeature {
  const FeatureSpec* spec = nullptr;
  std::size_t column = 0;
  std::vector<std::string> levels;     // onehot / binary
  std::vector<double> interior_edges;  // bins / quantile bins
  std::size_t width = 0;
};

std::vector<double> InteriorEdges(const std::vector<double>& edges) {
  if (edges.size() < 2) return {};
  return {edges.begin() + 1, edges.end() - 1};
}

}  // namespace

Batch TabularDataset::ToBatch() const {
  Batch b;
  b.features = features;
  b.targets = labels;
  b.groups = groups;
  return b;
}

void PreprocessSchema::Validate() const {
  if (target.empty()) throw ValidationError("schema: target column required");
  if (group.empty()) throw ValidationError("schema: group column required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("schema: train_fraction must lie in (0, 1)");
  }
  if (features.empty()) throw ValidationError("schema: no features declared");
  for (const auto& f : features) {
    if (f.encoding == Encoding::kBins) {
      if (f.edges.size() < 2) {
        throw ValidationError("schema: '" + f.column + "' needs at least two bin edges");
      }
      for (std::size_t i = 1; i < f.edges.size(); ++i) {
        if (!(f.edges[i] > f.edges[i - 1])) {
          throw ValidationError("schema: bin edges of '" + f.column +
                                "' must increase strictly");
        }
      }
    }
    if (f.encoding == Encoding::kQuantileBins && f.bins < 1) {
      throw ValidationError("schema: '" + f.column + "' needs bins >= 1");
    }
    if (f.encoding == Encoding::kBinary && f.positive.empty()) {
      throw ValidationError("schema: binary column '" + f.column +
                            "' needs a positive level");
    }
  }
}

PreprocessSchema ParseSchema(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
  PreprocessSchema s;
  try {
    for (const auto& f : j.value("filters", nlohmann::json::array())) {
      s.filters.push_back({f.at("column").get<std::string>(), f.at("min").get<double>(),
                           f.at("max").get<double>()});
    }
    s.keep = j.value("keep", std::vector<std::string>{});
    if (j.contains("recode")) {
      s.recode = j.at("recode").get<std::map<std::string, std::map<std::string, std::string>>>();
    }
    s.target = j.at("target").get<std::string>();
    s.positive_label = j.value("positive_label", std::string("1"));
    s.group = j.at("group").get<std::string>();
    s.train_fraction = j.value("train_fraction", 0.7);
    for (const auto& f : j.at("features")) {
      FeatureSpec fs;
      fs.column = f.at("column").get<std::string>();
      fs.encoding = ParseEncoding(f.at("encoding").get<std::string>());
      fs.positive = f.value("positive", std::string());
      fs.edges = f.value("edges", std::vector<double>{});
      fs.bins = f.value("bins", 5);
      s.features.push_back(std::move(fs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
  s.Validate();
  return s;
}

PreprocessSchema LoadSchema(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open schema " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return ParseSchema(buf.str());
}

std::size_t BinIndex(double value, const std::vector<double>& interior_edges) {
  // Number of interior edges strictly below the value.
  return static_cast<std::size_t>(
      std::lower_bound(interior_edges.begin(), interior_edges.end(), value) -
      interior_edges.begin());
}

std::vector<double> QuantileEdges(std::vector<double> values, int bins) {
  if (values.empty()) throw ValidationError("quantiles of an empty column");
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const double last = static_cast<double>(values.size() - 1);
  for (int k = 1; k < bins; ++k) {
    const double pos = last * k / bins;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    const double q = values[lo] + frac * (values[hi] - values[lo]);
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  return edges;
}

std::vector<std::size_t> SeededPermutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(internal::UniformIndex(rng, i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

PreprocessResult Preprocess(const CsvTable& table, const PreprocessSchema& schema,
                            std::uint64_t seed) {
  schema.Validate();
  for (const auto& c : schema.keep) table.Column(c);
  const std::size_t target_col = table.Column(schema.target);
  const std::size_t group_col = table.Column(schema.group);

  // Filter on numeric ranges (inclusive).
  std::vector<Row> rows;
  for (const Row& r : table.rows) {
    bool ok = true;
    for (const auto& f : schema.filters) {
      const double v = ParseNumber(r[table.Column(f.column)], f.column);
      if (v < f.min || v > f.max) {
        ok = false;
        break;
      }
    }
    if (ok) rows.push_back(r);
  }
  // Value recoding.
  for (const auto& [column, mapping] : schema.recode) {
    const std::size_t c = table.Column(column);
    for (Row& r : rows) {
      auto it = mapping.find(r[c]);
      if (it != mapping.end()) r[c] = it->second;
    }
  }
  if (rows.size() < 2) throw ValidationError("fewer than two rows after filtering");

  // Train/test split.
  const std::vector<std::size_t> perm = SeededPermutation(rows.size(), seed);
  auto n_train = static_cast<std::size_t>(
      std::llround(schema.train_fraction * static_cast<double>(rows.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
  std::vector<const Row*> train, test;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? train : test).push_back(&rows[perm[i]]);
  }

  // Fit encoders on the training split.
  std::vector<FittedFeature> fitted;
  std::vector<std::string> names;
  for (const auto& spec : schema.features) {
    FittedFeature ff;
    ff.spec = &spec;
    ff.column = table.Column(spec.column);
    switch (spec.encoding) {
      case Encoding::kOneHot:
      case Encoding::kBinary: {
        std::set<std::string> levels;
        for (const Row* r : train) levels.insert((*r)[ff.column]);
        ff.levels.assign(levels.begin(), levels.end());
        if (spec.encoding == Encoding::kOneHot) {
          ff.width = ff.levels.size();
          for (const auto& l : ff.levels) names.push_back(spec.column + "=" + l);
        } else {
          if (ff.levels.size() > 2) {
            throw ValidationError("binary column '" + spec.column + "' has " +
                                  std::to_string(ff.levels.size()) + " levels");
          }
          ff.width = 1;
          names.push_back(spec.column + "=" + spec.positive);
        }
        break;
      }
      case Encoding::kBins:
      case Encoding::kQuantileBins: {
        if (spec.encoding == Encoding::kBins) {
          ff.interior_edges = InteriorEdges(spec.edges);
        } else {
          std::vector<double> values;
          for (const Row* r : train) values.push_back(ParseNumber((*r)[ff.column], spec.column));
          ff.interior_edges = QuantileEdges(std::move(values), spec.bins);
        }
        ff.width = ff.interior_edges.size() + 1;
        for (std::size_t b = 0; b < ff.width; ++b) {
          names.push_back(spec.column + "#" + std::to_string(b));
        }
        break;
      }
      case Encoding::kNumeric:
        ff.width = 1;
        names.push_back(spec.column);
        break;
    }
    fitted.push_back(std::move(ff));
  }
  std::set<std::string> group_levels;
  for (const Row* r : train) group_levels.insert((*r)[group_col]);
  const std::vector<std::string> group_names(group_levels.begin(), group_levels.end());

  const std::size_t width = names.size();
  PreprocessResult result;
  auto encode = [&](const std::vector<const Row*>& split, bool report) {
    TabularDataset ds;
    ds.feature_names = names;
    ds.group_names = group_names;
    std::vector<double> data;
    for (const Row* rp : split) {
      const Row& r = *rp;
      std::vector<double> x;
      x.reserve(width);
      std::string unseen;
      for (const auto& ff : fitted) {
        const std::string& v = r[ff.column];
        switch (ff.spec->encoding) {
          case Encoding::kOneHot: {
            auto it = std::lower_bound(ff.levels.begin(), ff.levels.end(), v);
            if (it == ff.levels.end() || *it != v) {
              unseen = ff.spec->column + "=" + v;
              break;
            }
            for (std::size_t k = 0; k < ff.width; ++k) {
              x.push_back(ff.levels[k] == v ? 1.0 : 0.0);
            }
            break;
          }
          case Encoding::kBinary:
            if (!std::binary_search(ff.levels.begin(), ff.levels.end(), v)) {
              unseen = ff.spec->column + "=" + v;
              break;
            }
            x.push_back(v == ff.spec->positive ? 1.0 : 0.0);
            break;
          case Encoding::kBins:
          case Encoding::kQuantileBins: {
            const std::size_t b =
                BinIndex(ParseNumber(v, ff.spec->column), ff.interior_edges);
            for (std::size_t k = 0; k < ff.width; ++k) x.push_back(k == b ? 1.0 : 0.0);
            break;
          }
          case Encoding::kNumeric:
            x.push_back(ParseNumber(v, ff.spec->column));
            break;
        }
        if (!unseen.empty()) break;
      }
      const std::string& g = r[group_col];
      auto git = std::lower_bound(group_names.begin(), group_names.end(), g);
      if (unseen.empty() && (git == group_names.end() || *git != g)) {
        unseen = schema.group + "=" + g;
      }
      if (!unseen.empty()) {
        if (report) result.dropped.push_back("dropped row: unseen level " + unseen);
        continue;
      }
      data.insert(data.end(), x.begin(), x.end());
      ds.labels.push_back(r[target_col] == schema.positive_label ? 1.0 : 0.0);
      ds.groups.push_back(static_cast<int>(git - group_names.begin()));
    }
    ds.features = Tensor::Matrix(ds.labels.size(), width, std::move(data));
    return ds;
  };
  result.train = encode(train, false);
  result.test = encode(test, true);
  return result;
}

PreprocessResult LoadAndPreprocess(const std::filesystem::path& csv,
                                   const PreprocessSchema& schema, std::uint64_t seed) {
  return Preprocess(ReadCsv(csv), schema, seed);
}

}  // namespace eqcl
