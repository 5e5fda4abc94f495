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

#ifndef EQCL_TENSOR_H_
#define EQCL_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace eqcl {

using Shape = std::vector<std::size_t>;

// Number of elements described by `shape` (1 for the scalar shape {}).
std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles with rank 0, 1 or 2.
//
// Rank-1 tensors broadcast like numpy row vectors, i.e. shape {n} behaves as
// {1, n}. Model inputs and outputs are rank-2 with a leading batch axis.
class Tensor {
 public:
  Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);
  // n x 1 column from a vector.
  static Tensor Column(std::span<const double> values);
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  // Row/column counts of the broadcasting 2-D view.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  // Value of a one-element tensor; throws ShapeError otherwise.
  double item() const;
  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Result shape of broadcasting `a` against `b`; throws ShapeError.
Shape BroadcastShape(const Shape& a, const Shape& b);

}  // namespace eqcl

#endif  // EQCL_TENSOR_H_
