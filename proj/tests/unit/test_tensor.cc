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

#include <limits>

#include "doctest.h"
#include "eqcl/error.h"

using eqcl::Shape;
using eqcl::Tensor;

TEST_CASE("tensor construction validates length against shape") {
  CHECK_NOTHROW(Tensor({2, 3}, std::vector<double>(6, 1.0)));
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 1.0)), eqcl::ShapeError);
  CHECK_THROWS_AS(Tensor({1, 1, 1}, {1.0}), eqcl::ShapeError);
}

TEST_CASE("factories and accessors") {
  const Tensor m = Tensor::Matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.shape() == Shape{2, 3});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6.0);
  CHECK(Tensor::Scalar(4.5).item() == 4.5);
  CHECK(Tensor::Zeros({3}).rows() == 1);
  CHECK(Tensor::Zeros({3}).cols() == 3);
  const std::vector<double> v{1, 2};
  CHECK(Tensor::Column(v).shape() == Shape{2, 1});
  CHECK_THROWS_AS(m.item(), eqcl::ShapeError);
  CHECK_THROWS_AS(Tensor::Matrix({{1, 2}, {3}}), eqcl::ShapeError);
}

TEST_CASE("empty leading axis is allowed") {
  const Tensor e = Tensor::Zeros({0, 4});
  CHECK(e.size() == 0);
  CHECK(e.cols() == 4);
}

TEST_CASE("finiteness check") {
  Tensor t = Tensor::Zeros({2});
  CHECK(t.AllFinite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.AllFinite());
}

TEST_CASE("broadcast follows numpy rules for rank <= 2") {
  CHECK(eqcl::BroadcastShape({3, 1}, {1, 4}) == Shape{3, 4});
  CHECK(eqcl::BroadcastShape({}, {2, 2}) == Shape{2, 2});
  CHECK(eqcl::BroadcastShape({4}, {3, 4}) == Shape{3, 4});
  CHECK(eqcl::BroadcastShape({4}, {4}) == Shape{4});
  CHECK_THROWS_AS(eqcl::BroadcastShape({3, 2}, {4, 2}), eqcl::ShapeError);
}
