// Copyright 2026 The aggstat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exception hierarchy shared by every module. Callers that only care about
// "something in aggstat failed" catch aggstat::Error; the CLI maps the
// concrete types onto exit codes.

#ifndef AGGSTAT_ERRORS_HPP_
#define AGGSTAT_ERRORS_HPP_

#include <exception>
#include <stdexcept>
#include <string>
#include <utility>

namespace aggstat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (poles,
// non-positive shapes, gamma outside (0, 1], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Result not representable as a finite double.
class OverflowError : public Error {
 public:
  using Error::Error;
};

// A requested moment does not exist (e.g. exp-Gamma variance with beta*s >= 1/2).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class NonPositiveVarianceError : public Error {
 public:
  using Error::Error;
};

class MissingMomentError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class CorrelationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// Input carries no information (constant samples, all-zero filter, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Raised by the block predictor; wraps the underlying failure and names the
// layer where it happened.
class PropagationError : public Error {
 public:
  PropagationError(std::string layer, const std::string& what, std::exception_ptr cause = nullptr)
      : Error(layer + ": " + what), layer_(std::move(layer)), cause_(std::move(cause)) {}

  const std::string& layer() const noexcept { return layer_; }
  /// The original exception, if one was captured.
  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  std::string layer_;
  std::exception_ptr cause_;
};

}  // namespace aggstat

#endif  // AGGSTAT_ERRORS_HPP_
