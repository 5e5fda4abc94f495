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

#include "eqcl/models.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "eqcl/error.h"
#include "random.h"
#include "json.hpp"

namespace eqcl {
namespace {

struct LayerShape {
  std::size_t fan_in, fan_out;
};

std::vector<LayerShape> Layers(const ModelSpec& spec) {
  std::vector<LayerShape> layers;
  std::size_t prev = spec.input_size;
  if (spec.kind == ModelKind::kMlp) {
    for (std::size_t h : spec.hidden) {
      layers.push_back({prev, h});
      prev = h;
    }
  }
  layers.push_back({prev, spec.output_size});
  return layers;
}

}  // namespace

const char* ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

ModelKind ParseModelKind(const std::string& name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw ValidationError("unknown model kind '" + name + "'");
}

void ModelSpec::Validate() const {
  if (input_size == 0 || output_size == 0) {
    throw ValidationError("model input and output sizes must be positive");
  }
  if (kind == ModelKind::kMlp) {
    if (hidden.empty()) throw ValidationError("mlp needs at least one hidden layer");
    for (std::size_t h : hidden) {
      if (h == 0) throw ValidationError("mlp hidden widths must be positive");
    }
  }
}

std::size_t ModelSpec::NumParams() const {
  std::size_t n = 0;
  for (const LayerShape& l : Layers(*this)) {
    n += l.fan_in * l.fan_out + (bias ? l.fan_out : 0);
  }
  return n;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  theta_.assign(spec_.NumParams(), 0.0);
  std::size_t offset = 0;
  std::size_t k = 0;
  for (const LayerShape& l : Layers(spec_)) {
    leaves_.push_back(Parameter("W" + std::to_string(k), {l.fan_in, l.fan_out}));
    offsets_.push_back(offset);
    offset += l.fan_in * l.fan_out;
    if (spec_.bias) {
      leaves_.push_back(Parameter("b" + std::to_string(k), {1, l.fan_out}));
      offsets_.push_back(offset);
      offset += l.fan_out;
    }
    ++k;
  }
}

void Model::set_params(std::span<const double> theta) {
  if (theta.size() != theta_.size()) {
    throw ValidationError("expected " + std::to_string(theta_.size()) +
                          " parameters, got " + std::to_string(theta.size()));
  }
  for (double v : theta) {
    if (!std::isfinite(v)) throw ValidationError("non-finite parameter value");
  }
  theta_.assign(theta.begin(), theta.end());
}

void Model::BindParams(Bindings& bindings) const {
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    const std::size_t n = NumElements(leaves_[i].shape());
    auto first = theta_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    bindings.Bind(leaves_[i],
                  Tensor(leaves_[i].shape(), std::vector<double>(first, first + n)));
  }
}

Bindings Model::bindings() const {
  Bindings b;
  BindParams(b);
  return b;
}

Expr Model::Forward(const Expr& x) const {
  if (x.shape().size() != 2 || x.shape()[1] != spec_.input_size) {
    throw ShapeError("model expects (batch, " + std::to_string(spec_.input_size) +
                     ") input, got " + ShapeToString(x.shape()));
  }
  Expr h = x;
  const std::size_t step = spec_.bias ? 2 : 1;
  const std::size_t num_layers = leaves_.size() / step;
  for (std::size_t k = 0; k < num_layers; ++k) {
    h = MatMul(h, leaves_[k * step]);
    if (spec_.bias) h = h + leaves_[k * step + 1];
    if (k + 1 < num_layers) h = Tanh(h);
  }
  if (spec_.kind == ModelKind::kLogistic || spec_.squash == OutputSquash::kSigmoid) {
    h = Sigmoid(h);
  }
  return h;
}

Model InitParams(const ModelSpec& spec, std::uint64_t seed) {
  Model model(spec);
  if (spec.kind != ModelKind::kMlp) return model;
  std::mt19937_64 rng(seed);
  std::vector<double> theta;
  theta.reserve(model.num_params());
  for (const LayerShape& l : Layers(spec)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in));
    for (std::size_t i = 0; i < l.fan_in * l.fan_out; ++i) {
      theta.push_back(bound * (2.0 * internal::Uniform01(rng) - 1.0));
    }
    if (spec.bias) theta.insert(theta.end(), l.fan_out, 0.0);
  }
  model.set_params(theta);
  return model;
}

Tensor Predict(const Model& model, const Tensor& x) {
  Tensor batch = x.rank() == 2 ? x : Tensor({1, x.size()}, x.values());
  const Expr out = model.Forward(Constant(std::move(batch)));
  return Evaluate(out, model.bindings());
}

Expr L2Penalty(const Model& model, double alpha) {
  if (alpha < 0) throw ValidationError("l2 weight must be nonnegative");
  Expr total;
  for (const Expr& leaf : model.parameter_leaves()) {
    Expr s = Sum(Square(leaf));
    total = total ? total + s : s;
  }
  return (alpha / 2.0) * total;
}

void SaveCheckpoint(const Model& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "theta.csv");
    if (!out) throw ValidationError("cannot write " + (dir / "theta.csv").string());
    char buf[64];
    for (double v : model.params()) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", v);
      out << buf;
    }
  }
  const ModelSpec& s = model.spec();
  nlohmann::json j = {{"kind", ModelKindName(s.kind)},
                      {"input_size", s.input_size},
                      {"output_size", s.output_size},
                      {"hidden", s.hidden},
                      {"bias", s.bias},
                      {"squash", s.squash == OutputSquash::kSigmoid ? "sigmoid" : "none"},
                      {"num_params", model.num_params()}};
  std::ofstream(dir / "model.json") << j.dump(2) << '\n';
}

Model LoadCheckpoint(const std::filesystem::path& dir) {
  std::ifstream header(dir / "model.json");
  if (!header) throw ValidationError("missing " + (dir / "model.json").string());
  nlohmann::json j;
  try {
    header >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model.json: ") + e.what());
  }
  ModelSpec spec;
  spec.kind = ParseModelKind(j.at("kind").get<std::string>());
  spec.input_size = j.at("input_size").get<std::size_t>();
  spec.output_size = j.at("output_size").get<std::size_t>();
  spec.hidden = j.value("hidden", std::vector<std::size_t>{});
  spec.bias = j.value("bias", true);
  spec.squash = j.value("squash", std::string("none")) == "sigmoid"
                    ? OutputSquash::kSigmoid
                    : OutputSquash::kNone;
  std::ifstream in(dir / "theta.csv");
  if (!in) throw ValidationError("missing " + (dir / "theta.csv").string());
  std::vector<double> theta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    theta.push_back(std::stod(line));
  }
  Model model(spec);
  model.set_params(theta);
  return model;
}

}  // namespace eqcl
