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

#ifndef EQCL_MODELS_H_
#define EQCL_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eqcl/autodiff.h"
#include "eqcl/tensor.h"

namespace eqcl {

enum class ModelKind { kLinear, kLogistic, kMlp };
enum class OutputSquash { kNone, kSigmoid };

const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  std::size_t input_size = 1;
  std::size_t output_size = 1;
  // Hidden layer widths, mlp only. Activation is tanh.
  std::vector<std::size_t> hidden;
  bool bias = true;
  // Applied after the last layer for linear/mlp; logistic always squashes.
  OutputSquash squash = OutputSquash::kNone;

  // Throws ValidationError when the spec is malformed.
  void Validate() const;
  std::size_t NumParams() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// A parameterized predictor f_theta.
//
// theta is flattened per layer: weights (fan_in x fan_out, row-major), then
// biases. That order is shared by GradParams over parameter_leaves() and by
// checkpoints.
class Model {
 public:
  // All parameters zero.
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_params() const { return theta_.size(); }
  std::span<const double> params() const { return theta_; }
  void set_params(std::span<const double> theta);

  // Parameter leaves in canonical order.
  const std::vector<Expr>& parameter_leaves() const { return leaves_; }
  // Binds theta to the parameter leaves.
  void BindParams(Bindings& bindings) const;
  Bindings bindings() const;

  // f_theta applied to a (batch x input_size) expression.
  Expr Forward(const Expr& x) const;

 private:
  ModelSpec spec_;
  std::vector<double> theta_;
  std::vector<Expr> leaves_;
  std::vector<std::size_t> offsets_;  // start of each leaf inside theta_
};

// Deterministic initialisation: mlp weights uniform in +-1/sqrt(fan_in) with
// zero biases; linear and logistic models start at zero.
Model InitParams(const ModelSpec& spec, std::uint64_t seed);

// f_theta(x) for x of shape (batch, input) or (input).
Tensor Predict(const Model& model, const Tensor& x);

// (alpha / 2) * ||theta||^2 as a differentiable scalar.
Expr L2Penalty(const Model& model, double alpha);

// Checkpoint: <dir>/theta.csv (one value per line) and <dir>/model.json.
void SaveCheckpoint(const Model& model, const std::filesystem::path& dir);
Model LoadCheckpoint(const std::filesystem::path& dir);

}  // namespace eqcl

#endif  // EQCL_MODELS_H_
