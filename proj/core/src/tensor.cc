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

#include "eqcl/tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "eqcl/error.h"

namespace eqcl {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) {
    throw ShapeError("tensors are limited to rank 2, got " +
                     ShapeToString(shape_));
  }
  if (NumElements(shape_) != data_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeToString(shape_));
  }
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  const std::size_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::Column(std::span<const double> values) {
  return Tensor({values.size(), 1},
                std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::Matrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<double> data;
  std::size_t cols = rows.size() ? rows.begin()->size() : 0;
  for (const auto& row : rows) {
    if (row.size() != cols) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({rows.size(), cols}, std::move(data));
}

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const {
  switch (shape_.size()) {
    case 0:
      return 1;
    case 1:
      return shape_[0];
    default:
      return shape_[1];
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item() on tensor of shape " + ShapeToString(shape_));
  }
  return data_[0];
}

bool Tensor::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Shape BroadcastShape(const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (NumElements(a) == 1 && a.size() <= b.size()) return b;
  if (NumElements(b) == 1 && b.size() <= a.size()) return a;
  auto as2d = [](const Shape& s) -> std::pair<std::size_t, std::size_t> {
    if (s.empty()) return {1, 1};
    if (s.size() == 1) return {1, s[0]};
    return {s[0], s[1]};
  };
  auto [ar, ac] = as2d(a);
  auto [br, bc] = as2d(b);
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError("cannot broadcast " + ShapeToString(a) + " with " +
                     ShapeToString(b));
  };
  const std::size_t r = merge(ar, br);
  const std::size_t c = merge(ac, bc);
  if (a.size() < 2 && b.size() < 2) return Shape{c};
  return Shape{r, c};
}

}  // namespace eqcl
