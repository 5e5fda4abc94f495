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

#include "eqcl/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>
#include <utility>

#include "eqcl/error.h"

namespace eqcl {
namespace {

std::atomic<std::uint64_t> g_next_leaf_id{1};

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct View2 {
  std::size_t rows, cols;
};

View2 ViewOf(const Shape& s) {
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  return {s[0], s[1]};
}

Expr MakeNode(Node node) {
  return Expr(std::make_shared<const Node>(std::move(node)));
}

Expr MakeUnary(Op op, const Expr& a) {
  Node n{.op = op, .shape = a.shape(), .children = {a}};
  return MakeNode(std::move(n));
}

Expr MakeBinary(Op op, const Expr& a, const Expr& b) {
  Node n{.op = op, .shape = BroadcastShape(a.shape(), b.shape()),
         .children = {a, b}};
  return MakeNode(std::move(n));
}

Shape ReducedShape(const Shape& in, int axis) {
  const View2 v = ViewOf(in);
  switch (axis) {
    case -1:
      return {};
    case 0:
      return {1, v.cols};
    case 1:
      return {v.rows, 1};
    default:
      throw ShapeError("reduction axis must be -1, 0 or 1");
  }
}

// ---- Numeric kernels ---------------------------------------------------

template <typename F>
Tensor Binary(const Tensor& a, const Tensor& b, const Shape& out, F f) {
  Tensor r = Tensor::Zeros(out);
  auto rd = r.mutable_data();
  auto ad = a.data();
  auto bd = b.data();
  if (a.shape() == out && b.shape() == out) {
    for (std::size_t i = 0; i < rd.size(); ++i) rd[i] = f(ad[i], bd[i]);
    return r;
  }
  if (b.size() == 1 && a.shape() == out) {
    const double bv = bd[0];
    for (std::size_t i = 0; i < rd.size(); ++i) rd[i] = f(ad[i], bv);
    return r;
  }
  if (a.size() == 1 && b.shape() == out) {
    const double av = ad[0];
    for (std::size_t i = 0; i < rd.size(); ++i) rd[i] = f(av, bd[i]);
    return r;
  }
  const View2 vo = ViewOf(out), va = ViewOf(a.shape()), vb = ViewOf(b.shape());
  for (std::size_t i = 0; i < vo.rows; ++i) {
    const std::size_t ar = va.rows == 1 ? 0 : i;
    const std::size_t br = vb.rows == 1 ? 0 : i;
    for (std::size_t j = 0; j < vo.cols; ++j) {
      const std::size_t ac = va.cols == 1 ? 0 : j;
      const std::size_t bc = vb.cols == 1 ? 0 : j;
      rd[i * vo.cols + j] = f(ad[ar * va.cols + ac], bd[br * vb.cols + bc]);
    }
  }
  return r;
}

template <typename F>
Tensor Unary(const Tensor& a, F f) {
  auto ad = a.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(ad[i]);
  return Tensor(a.shape(), std::move(out));
}

// Sums a broadcast result back down to `target`.
Tensor SumTo(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor r = Tensor::Zeros(target);
  auto rd = r.mutable_data();
  auto gd = g.data();
  const View2 vg = ViewOf(g.shape()), vt = ViewOf(target);
  for (std::size_t i = 0; i < vg.rows; ++i) {
    const std::size_t tr = vt.rows == 1 ? 0 : i;
    for (std::size_t j = 0; j < vg.cols; ++j) {
      const std::size_t tc = vt.cols == 1 ? 0 : j;
      rd[tr * vt.cols + tc] += gd[i * vg.cols + j];
    }
  }
  return r;
}

Tensor Reduce(const Tensor& a, int axis, const Shape& out, bool mean) {
  Tensor r = Tensor::Zeros(out);
  auto rd = r.mutable_data();
  auto ad = a.data();
  const View2 va = ViewOf(a.shape());
  if (axis == -1) {
    double s = 0.0;
    for (double v : ad) s += v;
    rd[0] = mean ? s / static_cast<double>(ad.size()) : s;
    return r;
  }
  for (std::size_t i = 0; i < va.rows; ++i) {
    for (std::size_t j = 0; j < va.cols; ++j) {
      rd[axis == 0 ? j : i] += ad[i * va.cols + j];
    }
  }
  if (mean) {
    const double n = static_cast<double>(axis == 0 ? va.rows : va.cols);
    for (double& v : rd) v /= n;
  }
  return r;
}

// Broadcasts a reduced adjoint back to the input shape.
Tensor ExpandReduced(const Tensor& g, const Shape& in, int axis, bool mean) {
  Tensor r = Tensor::Zeros(in);
  auto rd = r.mutable_data();
  auto gd = g.data();
  const View2 va = ViewOf(in);
  double scale = 1.0;
  if (mean) {
    scale = axis == -1   ? 1.0 / static_cast<double>(r.size())
            : axis == 0 ? 1.0 / static_cast<double>(va.rows)
                        : 1.0 / static_cast<double>(va.cols);
  }
  for (std::size_t i = 0; i < va.rows; ++i) {
    for (std::size_t j = 0; j < va.cols; ++j) {
      const double gv = axis == -1 ? gd[0] : axis == 0 ? gd[j] : gd[i];
      rd[i * va.cols + j] = gv * scale;
    }
  }
  return r;
}

Tensor MatMulValues(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  const auto ar = static_cast<Eigen::Index>(a.rows());
  const auto ac = static_cast<Eigen::Index>(a.cols());
  const auto br = static_cast<Eigen::Index>(b.rows());
  const auto bc = static_cast<Eigen::Index>(b.cols());
  Eigen::Map<const RowMajor> am(a.data().data(), ar, ac);
  Eigen::Map<const RowMajor> bm(b.data().data(), br, bc);
  const Eigen::Index r = ta ? ac : ar;
  const Eigen::Index c = tb ? br : bc;
  std::vector<double> out(static_cast<std::size_t>(r * c));
  Eigen::Map<RowMajor> om(out.data(), r, c);
  if (ta) {
    om.noalias() = am.transpose() * bm;
  } else if (tb) {
    om.noalias() = am * bm.transpose();
  } else {
    om.noalias() = am * bm;
  }
  return Tensor::Matrix(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                        std::move(out));
}

// Forward product with a fixed summation order per output element (p
// ascending from 0.0), so a batch result is bit-identical to evaluating each
// row on its own. Rows are independent; the 4x8 register tiles only change
// which elements are in flight together.
#if defined(__GNUC__)
using V4 = double __attribute__((vector_size(32)));

inline V4 LoadV4(const double* p) {
  V4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void StoreV4(double* p, V4 v) { std::memcpy(p, &v, sizeof(v)); }
#endif

Tensor RowwiseMatMul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  double* od = out.data();
  std::size_t n_tiled = 0, m_tiled = 0;
#if defined(__GNUC__)
  constexpr std::size_t kR = 4, kC = 8;
  n_tiled = n - n % kR;
  m_tiled = m - m % kC;
  for (std::size_t i = 0; i < n_tiled; i += kR) {
    for (std::size_t j = 0; j < m_tiled; j += kC) {
      V4 acc[kR][2] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const V4 b0 = LoadV4(bd + p * m + j);
        const V4 b1 = LoadV4(bd + p * m + j + 4);
        for (std::size_t r = 0; r < kR; ++r) {
          const double s = ad[(i + r) * k + p];
          acc[r][0] += s * b0;
          acc[r][1] += s * b1;
        }
      }
      for (std::size_t r = 0; r < kR; ++r) {
        StoreV4(od + (i + r) * m + j, acc[r][0]);
        StoreV4(od + (i + r) * m + j + 4, acc[r][1]);
      }
    }
  }
#endif
  // Remaining columns of the tiled rows, then the remaining rows.
  auto plain = [&](std::size_t i, std::size_t j0) {
    double* row = od + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ad[i * k + p];
      const double* brow = bd + p * m;
      for (std::size_t j = j0; j < m; ++j) row[j] += s * brow[j];
    }
  };
  if (m_tiled < m) {
    for (std::size_t i = 0; i < n_tiled; ++i) plain(i, m_tiled);
  }
  for (std::size_t i = n_tiled; i < n; ++i) plain(i, 0);
  return Tensor::Matrix(n, m, std::move(out));
}

void AddInto(Tensor& acc, const Tensor& g) {
  auto ad = acc.mutable_data();
  auto gd = g.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += gd[i];
}

// Elementwise tanh through one vectorized exp. Absolute error stays within a
// couple of ulps; the odd series takes over near zero, where
// 1 - 2 / (e + 1) would lose relative accuracy.
Tensor TanhValues(const Tensor& a) {
  std::vector<double> out(a.size());
  const auto n = static_cast<Eigen::Index>(out.size());
  constexpr Eigen::Index kBlock = 256;
  alignas(64) double e[kBlock];
  for (Eigen::Index i0 = 0; i0 < n; i0 += kBlock) {
    const Eigen::Index len = std::min(kBlock, n - i0);
    const double* x = a.data().data() + i0;
    double* r = out.data() + i0;
    Eigen::Map<Eigen::ArrayXd>(e, len) =
        (2.0 * Eigen::Map<const Eigen::ArrayXd>(x, len).abs().min(22.0)).exp();
    Eigen::Index j = 0;
#if defined(__GNUC__)
    // Vector selects: the signs are data-dependent and branch badly.
    for (; j + 4 <= len; j += 4) {
      const V4 xv = LoadV4(x + j);
      const V4 x2 = xv * xv;
      const V4 near = xv * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (-17.0 / 315.0))));
      const V4 far = 1.0 - 2.0 / (LoadV4(e + j) + 1.0);
      const V4 signed_far = xv < 0.0 ? -far : far;
      StoreV4(r + j, (xv < 0.02 && xv > -0.02) ? near : signed_far);
    }
#endif
    for (; j < len; ++j) {
      const double xv = x[j];
      const double x2 = xv * xv;
      const double near = xv * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (-17.0 / 315.0))));
      const double far = 1.0 - 2.0 / (e[j] + 1.0);
      const double signed_far = xv < 0.0 ? -far : far;
      r[j] = (xv < 0.02 && xv > -0.02) ? near : signed_far;
    }
  }
  return Tensor(a.shape(), std::move(out));
}

double SigmoidScalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Children-first ordering of every node reachable from `roots`.
std::vector<const Node*> TopoOrder(std::span<const Expr> roots) {
  std::vector<const Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<const Node*, std::size_t>> stack;
  for (const Expr& root : roots) {
    if (!root) throw ValidationError("null expression");
    if (!seen.insert(root.get()).second) continue;
    stack.emplace_back(root.get(), 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->children.size()) {
        const Node* child = node->children[next++].get();
        if (seen.insert(child).second) stack.emplace_back(child, 0);
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }
  return order;
}

Tensor LeafValue(const Node& n, const Bindings& bindings) {
  if (n.op == Op::kConstant) return *n.value;
  if (const Tensor* t = bindings.Find(n.leaf_id)) return *t;
  if (n.value) return *n.value;
  throw BindingError(std::string("unbound ") +
                     (n.op == Op::kParameter ? "parameter" : "input") +
                     " leaf '" + n.name + "'");
}

Tensor Forward(const Node& n, std::span<const Tensor* const> in) {
  switch (n.op) {
    case Op::kAdd:
      return Binary(*in[0], *in[1], n.shape, [](double a, double b) { return a + b; });
    case Op::kSub:
      return Binary(*in[0], *in[1], n.shape, [](double a, double b) { return a - b; });
    case Op::kMul:
      return Binary(*in[0], *in[1], n.shape, [](double a, double b) { return a * b; });
    case Op::kDiv:
      return Binary(*in[0], *in[1], n.shape, [](double a, double b) { return a / b; });
    case Op::kMatMul:
      return RowwiseMatMul(*in[0], *in[1]);
    case Op::kSum:
      return Reduce(*in[0], n.axis, n.shape, false);
    case Op::kMean:
      return Reduce(*in[0], n.axis, n.shape, true);
    case Op::kSquare:
      return Unary(*in[0], [](double a) { return a * a; });
    case Op::kSqrt:
      return Unary(*in[0], [](double a) { return std::sqrt(a); });
    case Op::kExp:
      return Unary(*in[0], [](double a) { return std::exp(a); });
    case Op::kLog:
      return Unary(*in[0], [](double a) { return std::log(a); });
    case Op::kSin:
      return Unary(*in[0], [](double a) { return std::sin(a); });
    case Op::kCos:
      return Unary(*in[0], [](double a) { return std::cos(a); });
    case Op::kTanh:
      return TanhValues(*in[0]);
    case Op::kSigmoid:
      return Unary(*in[0], SigmoidScalar);
    case Op::kMaxConst: {
      const double c = n.threshold;
      return Unary(*in[0], [c](double a) { return a > c ? a : c; });
    }
    case Op::kGate: {
      const double c = n.threshold;
      return Binary(*in[0], *in[1], n.shape,
                    [c](double a, double t) { return a > c ? t : 0.0; });
    }
    case Op::kGatherRows: {
      const Tensor& a = *in[0];
      const std::size_t cols = a.cols();
      std::vector<double> out;
      out.reserve(n.indices.size() * cols);
      for (std::size_t r : n.indices) {
        auto row = a.data().subspan(r * cols, cols);
        out.insert(out.end(), row.begin(), row.end());
      }
      return Tensor(n.shape, std::move(out));
    }
    case Op::kSliceCols: {
      const Tensor& a = *in[0];
      const std::size_t cols = a.cols(), w = n.end - n.begin;
      std::vector<double> out;
      out.reserve(a.rows() * w);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.data().subspan(r * cols + n.begin, w);
        out.insert(out.end(), row.begin(), row.end());
      }
      return Tensor(n.shape, std::move(out));
    }
    default:
      break;
  }
  throw Error(std::string("no forward rule for ") + OpName(n.op));
}

// Adjoint contributions of `n` to each of its children. `out` is the node's
// forward value and `g` its adjoint.
template <typename Emit>
void Backward(const Node& n, std::span<const Tensor* const> in,
              const Tensor& out, const Tensor& g, Emit emit) {
  auto mul = [](double a, double b) { return a * b; };
  switch (n.op) {
    case Op::kAdd:
      emit(0, SumTo(g, in[0]->shape()));
      emit(1, SumTo(g, in[1]->shape()));
      return;
    case Op::kSub:
      emit(0, SumTo(g, in[0]->shape()));
      emit(1, SumTo(Unary(g, [](double v) { return -v; }), in[1]->shape()));
      return;
    case Op::kMul:
      emit(0, SumTo(Binary(g, *in[1], n.shape, mul), in[0]->shape()));
      emit(1, SumTo(Binary(g, *in[0], n.shape, mul), in[1]->shape()));
      return;
    case Op::kDiv: {
      emit(0, SumTo(Binary(g, *in[1], n.shape,
                           [](double gv, double b) { return gv / b; }),
                    in[0]->shape()));
      Tensor gb = Binary(g, out, n.shape, mul);
      gb = Binary(gb, *in[1], n.shape, [](double v, double b) { return -v / b; });
      emit(1, SumTo(gb, in[1]->shape()));
      return;
    }
    case Op::kMatMul:
      emit(0, MatMulValues(g, *in[1], false, true));
      emit(1, MatMulValues(*in[0], g, true, false));
      return;
    case Op::kSum:
      emit(0, ExpandReduced(g, in[0]->shape(), n.axis, false));
      return;
    case Op::kMean:
      emit(0, ExpandReduced(g, in[0]->shape(), n.axis, true));
      return;
    case Op::kSquare:
      emit(0, Binary(g, *in[0], n.shape, [](double gv, double a) { return 2.0 * a * gv; }));
      return;
    case Op::kSqrt:
      emit(0, Binary(g, out, n.shape, [](double gv, double s) { return gv / (2.0 * s); }));
      return;
    case Op::kExp:
      emit(0, Binary(g, out, n.shape, mul));
      return;
    case Op::kLog:
      emit(0, Binary(g, *in[0], n.shape, [](double gv, double a) { return gv / a; }));
      return;
    case Op::kSin:
      emit(0, Binary(g, *in[0], n.shape,
                     [](double gv, double a) { return gv * std::cos(a); }));
      return;
    case Op::kCos:
      emit(0, Binary(g, *in[0], n.shape,
                     [](double gv, double a) { return -gv * std::sin(a); }));
      return;
    case Op::kTanh:
      emit(0, Binary(g, out, n.shape,
                     [](double gv, double t) { return gv * (1.0 - t * t); }));
      return;
    case Op::kSigmoid:
      emit(0, Binary(g, out, n.shape,
                     [](double gv, double s) { return gv * s * (1.0 - s); }));
      return;
    case Op::kMaxConst: {
      const double c = n.threshold;
      emit(0, Binary(g, *in[0], n.shape,
                     [c](double gv, double a) { return a > c ? gv : 0.0; }));
      return;
    }
    case Op::kGate: {
      const double c = n.threshold;
      Tensor gt = Binary(*in[0], g, n.shape,
                         [c](double a, double gv) { return a > c ? gv : 0.0; });
      emit(1, SumTo(gt, in[1]->shape()));
      return;
    }
    case Op::kGatherRows: {
      Tensor r = Tensor::Zeros(in[0]->shape());
      const std::size_t cols = r.cols();
      auto rd = r.mutable_data();
      auto gd = g.data();
      for (std::size_t k = 0; k < n.indices.size(); ++k) {
        for (std::size_t c = 0; c < cols; ++c) {
          rd[n.indices[k] * cols + c] += gd[k * cols + c];
        }
      }
      emit(0, std::move(r));
      return;
    }
    case Op::kSliceCols: {
      Tensor r = Tensor::Zeros(in[0]->shape());
      const std::size_t cols = r.cols(), w = n.end - n.begin;
      auto rd = r.mutable_data();
      auto gd = g.data();
      for (std::size_t i = 0; i < r.rows(); ++i) {
        for (std::size_t c = 0; c < w; ++c) {
          rd[i * cols + n.begin + c] = gd[i * w + c];
        }
      }
      emit(0, std::move(r));
      return;
    }
    default:
      return;  // leaves
  }
}

}  // namespace

const char* OpName(Op op) {
  switch (op) {
    case Op::kParameter: return "parameter";
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kMatMul: return "matmul";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kMaxConst: return "max";
    case Op::kGatherRows: return "gather_rows";
    case Op::kSliceCols: return "slice_cols";
    case Op::kGate: return "gate";
  }
  return "?";
}

const Shape& Expr::shape() const { return node_->shape; }
Op Expr::op() const { return node_->op; }
bool Expr::is_leaf() const {
  return node_->op == Op::kParameter || node_->op == Op::kInput ||
         node_->op == Op::kConstant;
}
std::uint64_t Expr::leaf_id() const { return node_->leaf_id; }

// ---- Builders -----------------------------------------------------------

Expr Parameter(std::string name, Shape shape) {
  NumElements(shape);
  if (shape.size() > 2) throw ShapeError("parameters are limited to rank 2");
  return MakeNode(Node{.op = Op::kParameter,
                       .shape = std::move(shape),
                       .leaf_id = g_next_leaf_id++,
                       .name = std::move(name)});
}

Expr Input(std::string name, Shape shape) {
  if (shape.size() > 2) throw ShapeError("inputs are limited to rank 2");
  return MakeNode(Node{.op = Op::kInput,
                       .shape = std::move(shape),
                       .leaf_id = g_next_leaf_id++,
                       .name = std::move(name)});
}

Expr Input(std::string name, Tensor value) {
  Shape shape = value.shape();
  return MakeNode(Node{.op = Op::kInput,
                       .shape = std::move(shape),
                       .leaf_id = g_next_leaf_id++,
                       .name = std::move(name),
                       .value = std::move(value)});
}

Expr Constant(Tensor value) {
  Shape shape = value.shape();
  return MakeNode(
      Node{.op = Op::kConstant, .shape = std::move(shape), .value = std::move(value)});
}

Expr Constant(double value) { return Constant(Tensor::Scalar(value)); }

Expr operator+(const Expr& a, const Expr& b) { return MakeBinary(Op::kAdd, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return MakeBinary(Op::kSub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return MakeBinary(Op::kMul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return MakeBinary(Op::kDiv, a, b); }
Expr operator+(const Expr& a, double b) { return a + Constant(b); }
Expr operator+(double a, const Expr& b) { return Constant(a) + b; }
Expr operator-(const Expr& a, double b) { return a - Constant(b); }
Expr operator-(double a, const Expr& b) { return Constant(a) - b; }
Expr operator*(const Expr& a, double b) { return a * Constant(b); }
Expr operator*(double a, const Expr& b) { return Constant(a) * b; }
Expr operator/(const Expr& a, double b) { return a / Constant(b); }
Expr operator-(const Expr& a) { return a * -1.0; }

Expr MatMul(const Expr& a, const Expr& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul shape mismatch " + ShapeToString(a.shape()) +
                     " x " + ShapeToString(b.shape()));
  }
  return MakeNode(Node{.op = Op::kMatMul,
                       .shape = {a.shape()[0], b.shape()[1]},
                       .children = {a, b}});
}

Expr Sum(const Expr& a, int axis) {
  return MakeNode(Node{.op = Op::kSum,
                       .shape = ReducedShape(a.shape(), axis),
                       .children = {a},
                       .axis = axis});
}

Expr Mean(const Expr& a, int axis) {
  if (NumElements(a.shape()) == 0) throw ShapeError("mean of empty tensor");
  return MakeNode(Node{.op = Op::kMean,
                       .shape = ReducedShape(a.shape(), axis),
                       .children = {a},
                       .axis = axis});
}

Expr Square(const Expr& a) { return MakeUnary(Op::kSquare, a); }
Expr Sqrt(const Expr& a) { return MakeUnary(Op::kSqrt, a); }
Expr Exp(const Expr& a) { return MakeUnary(Op::kExp, a); }
Expr Log(const Expr& a) { return MakeUnary(Op::kLog, a); }
Expr Sin(const Expr& a) { return MakeUnary(Op::kSin, a); }
Expr Cos(const Expr& a) { return MakeUnary(Op::kCos, a); }
Expr Tanh(const Expr& a) { return MakeUnary(Op::kTanh, a); }
Expr Sigmoid(const Expr& a) { return MakeUnary(Op::kSigmoid, a); }

Expr MaxWith(const Expr& a, double c) {
  return MakeNode(Node{.op = Op::kMaxConst,
                       .shape = a.shape(),
                       .children = {a},
                       .threshold = c});
}

Expr GatherRows(const Expr& a, std::vector<std::size_t> rows) {
  if (a.shape().size() != 2) throw ShapeError("gather_rows needs a rank-2 tensor");
  for (std::size_t r : rows) {
    if (r >= a.shape()[0]) throw ShapeError("gather_rows index out of range");
  }
  Shape shape{rows.size(), a.shape()[1]};
  return MakeNode(Node{.op = Op::kGatherRows,
                       .shape = std::move(shape),
                       .children = {a},
                       .indices = std::move(rows)});
}

Expr SliceCols(const Expr& a, std::size_t begin, std::size_t end) {
  if (a.shape().size() != 2 || begin >= end || end > a.shape()[1]) {
    throw ShapeError("invalid column slice of " + ShapeToString(a.shape()));
  }
  return MakeNode(Node{.op = Op::kSliceCols,
                       .shape = {a.shape()[0], end - begin},
                       .children = {a},
                       .begin = begin,
                       .end = end});
}

namespace {

Expr Gate(const Expr& a, const Expr& t, double c) {
  return MakeNode(Node{.op = Op::kGate,
                       .shape = BroadcastShape(a.shape(), t.shape()),
                       .children = {a, t},
                       .threshold = c});
}

}  // namespace

// ---- Evaluation ---------------------------------------------------------

Bindings& Bindings::Bind(const Expr& leaf, Tensor value) {
  if (!leaf || (leaf.op() != Op::kParameter && leaf.op() != Op::kInput)) {
    throw BindingError("only parameter and input leaves can be bound");
  }
  if (value.shape() != leaf.shape()) {
    throw ShapeError("binding for '" + leaf.node().name + "' has shape " +
                     ShapeToString(value.shape()) + ", expected " +
                     ShapeToString(leaf.shape()));
  }
  values_.insert_or_assign(leaf.leaf_id(), std::move(value));
  return *this;
}

const Tensor* Bindings::Find(std::uint64_t leaf_id) const {
  auto it = values_.find(leaf_id);
  return it == values_.end() ? nullptr : &it->second;
}

Tensor* Bindings::FindMutable(std::uint64_t leaf_id) {
  auto it = values_.find(leaf_id);
  return it == values_.end() ? nullptr : &it->second;
}

Evaluator::Evaluator(std::span<const Expr> roots, const Bindings& bindings)
    : order_(TopoOrder(roots)) {
  values_.reserve(order_.size());
  index_.reserve(order_.size());
  std::vector<const Tensor*> in;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const Node& n = *order_[i];
    index_.emplace(&n, i);
    if (n.children.empty()) {
      values_.push_back(LeafValue(n, bindings));
      continue;
    }
    in.clear();
    for (const Expr& c : n.children) in.push_back(&values_[index_.at(c.get())]);
    values_.push_back(Forward(n, in));
  }
}

const Tensor& Evaluator::Value(const Expr& expr) const {
  auto it = index_.find(expr.get());
  if (it == index_.end()) throw ValidationError("expression was not evaluated");
  return values_[it->second];
}

std::vector<double> Evaluator::Gradient(const Expr& root,
                                        std::span<const Expr> params) const {
  auto rit = index_.find(root.get());
  if (rit == index_.end()) throw ValidationError("root was not evaluated");
  if (NumElements(root.shape()) != 1) {
    throw ShapeError("gradient requires a one-element root, got " +
                     ShapeToString(root.shape()));
  }
  const std::size_t root_index = rit->second;
  std::vector<std::optional<Tensor>> adjoint(root_index + 1);
  adjoint[root_index] = Tensor::Full(root.shape(), 1.0);
  std::vector<const Tensor*> in;
  for (std::size_t k = root_index + 1; k-- > 0;) {
    if (!adjoint[k]) continue;
    const Node& n = *order_[k];
    if (n.children.empty()) continue;
    in.clear();
    for (const Expr& c : n.children) in.push_back(&values_[index_.at(c.get())]);
    Backward(n, in, values_[k], *adjoint[k], [&](std::size_t child, Tensor g) {
      const std::size_t ci = index_.at(n.children[child].get());
      if (adjoint[ci]) {
        AddInto(*adjoint[ci], g);
      } else {
        adjoint[ci] = std::move(g);
      }
    });
  }
  std::vector<double> grad;
  for (const Expr& p : params) {
    auto it = index_.find(p.get());
    const std::size_t size = NumElements(p.shape());
    if (it == index_.end() || it->second > root_index || !adjoint[it->second]) {
      grad.insert(grad.end(), size, 0.0);
    } else {
      auto d = adjoint[it->second]->data();
      grad.insert(grad.end(), d.begin(), d.end());
    }
  }
  return grad;
}

Tensor Evaluate(const Expr& expr, const Bindings& bindings) {
  const Expr roots[] = {expr};
  Evaluator ev(roots, bindings);
  return ev.Value(expr);
}

std::vector<Expr> ParameterLeaves(const Expr& expr) {
  const Expr roots[] = {expr};
  std::vector<Expr> leaves;
  std::unordered_set<const Node*> seen;
  std::vector<Expr> stack(roots, roots + 1);
  while (!stack.empty()) {
    Expr e = stack.back();
    stack.pop_back();
    if (!seen.insert(e.get()).second) continue;
    if (e.op() == Op::kParameter) leaves.push_back(e);
    for (const Expr& c : e.node().children) stack.push_back(c);
  }
  std::sort(leaves.begin(), leaves.end(), [](const Expr& a, const Expr& b) {
    return a.leaf_id() < b.leaf_id();
  });
  return leaves;
}

std::vector<double> GradParams(const Expr& expr, const Bindings& bindings,
                               std::span<const Expr> params) {
  const Expr roots[] = {expr};
  Evaluator ev(roots, bindings);
  return ev.Gradient(expr, params);
}

std::vector<double> GradParams(const Expr& expr, const Bindings& bindings) {
  const std::vector<Expr> params = ParameterLeaves(expr);
  return GradParams(expr, bindings, params);
}

// ---- Forward mode -------------------------------------------------------

namespace {

// Broadcasts a tangent up to the node's output shape.
Expr Expand(const Expr& t, const Shape& shape) {
  if (t.shape() == shape) return t;
  return t + Constant(Tensor::Zeros(shape));
}

Expr AddTangents(const Expr& a, const Expr& b, const Shape& shape) {
  if (a && b) return Expand(a + b, shape);
  if (a) return Expand(a, shape);
  if (b) return Expand(b, shape);
  return Expr();
}

}  // namespace

Expr Tangent(const Expr& expr, const Expr& input, const Tensor& direction) {
  if (!input || input.op() != Op::kInput) {
    throw ValidationError("tangent requested for a leaf that is not an input");
  }
  if (direction.shape() != input.shape()) {
    throw ShapeError("direction shape " + ShapeToString(direction.shape()) +
                     " does not match input shape " +
                     ShapeToString(input.shape()));
  }
  const Expr roots[] = {expr};
  const std::vector<const Node*> order = TopoOrder(roots);
  // Rebuild Expr handles for nodes (children carry the shared pointers).
  std::unordered_map<const Node*, Expr> handle;
  handle.emplace(expr.get(), expr);
  for (const Node* n : order) {
    for (const Expr& c : n->children) handle.emplace(c.get(), c);
  }
  std::unordered_map<const Node*, Expr> tan;
  for (const Node* np : order) {
    const Node& n = *np;
    const Expr self = handle.at(np);
    Expr ta, tb;
    if (!n.children.empty()) ta = tan[n.children[0].get()];
    if (n.children.size() > 1) tb = tan[n.children[1].get()];
    Expr t;
    switch (n.op) {
      case Op::kInput:
        if (n.leaf_id == input.leaf_id()) t = Constant(direction);
        break;
      case Op::kParameter:
      case Op::kConstant:
        break;
      case Op::kAdd:
        t = AddTangents(ta, tb, n.shape);
        break;
      case Op::kSub:
        t = AddTangents(ta, tb ? -tb : Expr(), n.shape);
        break;
      case Op::kMul: {
        const Expr& a = n.children[0];
        const Expr& b = n.children[1];
        t = AddTangents(ta ? ta * b : Expr(), tb ? a * tb : Expr(), n.shape);
        break;
      }
      case Op::kDiv: {
        const Expr& b = n.children[1];
        t = AddTangents(ta ? ta / b : Expr(), tb ? -(self * tb) / b : Expr(),
                        n.shape);
        break;
      }
      case Op::kMatMul: {
        const Expr& a = n.children[0];
        const Expr& b = n.children[1];
        t = AddTangents(ta ? MatMul(ta, b) : Expr(), tb ? MatMul(a, tb) : Expr(),
                        n.shape);
        break;
      }
      case Op::kSum:
        if (ta) t = Sum(ta, n.axis);
        break;
      case Op::kMean:
        if (ta) t = Mean(ta, n.axis);
        break;
      case Op::kSquare:
        if (ta) t = 2.0 * n.children[0] * ta;
        break;
      case Op::kSqrt:
        if (ta) t = ta / (2.0 * self);
        break;
      case Op::kExp:
        if (ta) t = self * ta;
        break;
      case Op::kLog:
        if (ta) t = ta / n.children[0];
        break;
      case Op::kSin:
        if (ta) t = Cos(n.children[0]) * ta;
        break;
      case Op::kCos:
        if (ta) t = -(Sin(n.children[0]) * ta);
        break;
      case Op::kTanh:
        if (ta) t = (1.0 - Square(self)) * ta;
        break;
      case Op::kSigmoid:
        if (ta) t = self * (1.0 - self) * ta;
        break;
      case Op::kMaxConst:
        if (ta) t = Gate(n.children[0], ta, n.threshold);
        break;
      case Op::kGate:
        if (tb) t = Gate(n.children[0], tb, n.threshold);
        break;
      case Op::kGatherRows:
        if (ta) t = GatherRows(ta, n.indices);
        break;
      case Op::kSliceCols:
        if (ta) t = SliceCols(ta, n.begin, n.end);
        break;
    }
    if (t) tan[np] = Expand(t, n.shape);
  }
  Expr result = tan[expr.get()];
  if (!result) return Constant(Tensor::Zeros(expr.shape()));
  return result;
}

Tensor InputDerivative(const Expr& expr, const Expr& input,
                       const Tensor& direction, const Bindings& bindings) {
  return Evaluate(Tangent(expr, input, direction), bindings);
}

double FiniteDiffCheck(const Expr& expr, const Bindings& bindings, double h) {
  if (!(h > 0)) throw ValidationError("finite-difference step must be positive");
  const std::vector<Expr> params = ParameterLeaves(expr);
  const std::vector<double> ad = GradParams(expr, bindings, params);
  Bindings probe = bindings;
  double worst = 0.0;
  std::size_t k = 0;
  for (const Expr& p : params) {
    Tensor* t = probe.FindMutable(p.leaf_id());
    if (!t) throw BindingError("unbound parameter leaf '" + p.node().name + "'");
    for (std::size_t i = 0; i < t->size(); ++i, ++k) {
      const double orig = (*t)[i];
      (*t)[i] = orig + h;
      const double fp = Evaluate(expr, probe).item();
      (*t)[i] = orig - h;
      const double fm = Evaluate(expr, probe).item();
      (*t)[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::abs(ad[k] - fd) / (std::abs(ad[k]) + 1e-12);
      if (!std::isfinite(err)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace eqcl
