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

#ifndef EQCL_AUTODIFF_H_
#define EQCL_AUTODIFF_H_

// Lazy expression graphs over Tensors.
//
// An Expr is an immutable DAG node. Leaves are parameters (differentiated by
// reverse mode through GradParams), inputs (differentiated by forward mode
// through Tangent / InputDerivative) or constants. Tangent() returns a new
// Expr, so a scalar built from input derivatives is itself differentiable
// with respect to parameters. That forward-over-reverse composition is what
// the PDE residual constraints rely on.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "eqcl/tensor.h"

namespace eqcl {

enum class Op {
  kParameter,
  kInput,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMatMul,
  kSum,
  kMean,
  kSquare,
  kSqrt,
  kExp,
  kLog,
  kSin,
  kCos,
  kTanh,
  kSigmoid,
  kMaxConst,
  kGatherRows,
  kSliceCols,
  // Internal: forwards child 1 where child 0 > threshold, zero elsewhere.
  // Emitted by Tangent() for kMaxConst; not part of the public builder set.
  kGate,
};

const char* OpName(Op op);

struct Node;

class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  const Node* get() const { return node_.get(); }
  explicit operator bool() const { return node_ != nullptr; }

  const Shape& shape() const;
  Op op() const;
  bool is_leaf() const;
  std::uint64_t leaf_id() const;

 private:
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op;
  Shape shape = {};
  std::vector<Expr> children = {};
  double threshold = 0.0;                 // kMaxConst / kGate
  int axis = -1;                          // kSum / kMean: -1 all, 0 rows, 1 cols
  std::vector<std::size_t> indices = {};  // kGatherRows
  std::size_t begin = 0, end = 0;         // kSliceCols, half-open
  std::uint64_t leaf_id = 0;              // leaves only
  std::string name = {};                  // leaves only
  std::optional<Tensor> value = {};       // constants, and inputs with a default
};

// ---- Leaves ----------------------------------------------------------------

Expr Parameter(std::string name, Shape shape);
// Input leaf that must be bound at evaluation time.
Expr Input(std::string name, Shape shape);
// Input leaf carrying a default value; bindings may override it.
Expr Input(std::string name, Tensor value);
Expr Constant(Tensor value);
Expr Constant(double value);

// ---- Primitives ------------------------------------------------------------
// Elementwise binary ops broadcast like numpy (rank <= 2).

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator+(const Expr& a, double b);
Expr operator+(double a, const Expr& b);
Expr operator-(const Expr& a, double b);
Expr operator-(double a, const Expr& b);
Expr operator*(const Expr& a, double b);
Expr operator*(double a, const Expr& b);
Expr operator/(const Expr& a, double b);
Expr operator-(const Expr& a);

Expr MatMul(const Expr& a, const Expr& b);
Expr Sum(const Expr& a, int axis = -1);
Expr Mean(const Expr& a, int axis = -1);
Expr Square(const Expr& a);
Expr Sqrt(const Expr& a);
Expr Exp(const Expr& a);
Expr Log(const Expr& a);
Expr Sin(const Expr& a);
Expr Cos(const Expr& a);
Expr Tanh(const Expr& a);
Expr Sigmoid(const Expr& a);
// max(a, c) elementwise. Subgradient 0 at the kink a == c.
Expr MaxWith(const Expr& a, double c);
Expr GatherRows(const Expr& a, std::vector<std::size_t> rows);
Expr SliceCols(const Expr& a, std::size_t begin, std::size_t end);

// ---- Evaluation ------------------------------------------------------------

class Bindings {
 public:
  // Binds a value to a parameter or input leaf; throws on shape mismatch.
  Bindings& Bind(const Expr& leaf, Tensor value);
  const Tensor* Find(std::uint64_t leaf_id) const;
  Tensor* FindMutable(std::uint64_t leaf_id);

 private:
  std::unordered_map<std::uint64_t, Tensor> values_;
};

// Forward value of `expr`. Throws BindingError for unbound leaves.
Tensor Evaluate(const Expr& expr, const Bindings& bindings);

// Parameter leaves reachable from `expr`, in creation order. Creation order is
// the canonical flattening order used by GradParams.
std::vector<Expr> ParameterLeaves(const Expr& expr);

// Gradient of a one-element expression with respect to `params`, flattened
// row-major per leaf and concatenated in the given order. Leaves that `expr`
// does not depend on contribute zeros.
std::vector<double> GradParams(const Expr& expr, const Bindings& bindings,
                               std::span<const Expr> params);
// Same, over ParameterLeaves(expr).
std::vector<double> GradParams(const Expr& expr, const Bindings& bindings);

// Evaluates several roots over one shared forward pass, then serves values
// and reverse-mode gradients from it.
class Evaluator {
 public:
  Evaluator(std::span<const Expr> roots, const Bindings& bindings);

  const Tensor& Value(const Expr& expr) const;
  std::vector<double> Gradient(const Expr& root,
                               std::span<const Expr> params) const;

 private:
  std::vector<const Node*> order_;
  std::unordered_map<const Node*, std::size_t> index_;
  std::vector<Tensor> values_;
};

// Forward-mode directional derivative of `expr` with respect to the input
// leaf `input` along `direction`, returned as a new expression. Throws
// ValidationError if `input` is not an input leaf and ShapeError if the
// direction does not match the leaf shape.
Expr Tangent(const Expr& expr, const Expr& input, const Tensor& direction);

// Numeric value of Tangent().
Tensor InputDerivative(const Expr& expr, const Expr& input,
                       const Tensor& direction, const Bindings& bindings);

// Max over parameter coordinates of |autodiff - central difference| /
// (|autodiff| + 1e-12), for a one-element `expr`.
double FiniteDiffCheck(const Expr& expr, const Bindings& bindings, double h);

}  // namespace eqcl

#endif  // EQCL_AUTODIFF_H_
