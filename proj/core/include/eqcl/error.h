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

#ifndef EQCL_ERROR_H_
#define EQCL_ERROR_H_

#include <stdexcept>
#include <string>

namespace eqcl {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes are incompatible for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A leaf was used without a value bound to it.
class BindingError : public Error {
 public:
  using Error::Error;
};

// Invalid argument, configuration or input data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Numerical failure inside a solver (rank deficiency, bracket failure, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The primal-dual iteration blew up (|L| above the divergence threshold).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqcl

#endif  // EQCL_ERROR_H_
