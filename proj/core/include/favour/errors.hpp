// Copyright 2026 The FAVOUR Authors
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

#ifndef FAVOUR_ERRORS_HPP_
#define FAVOUR_ERRORS_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace favour {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched dimensions, infeasible bounds, invalid counts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that is well-formed but semantically unusable (e.g. duplicate
// routes in a ranking).
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, singular matrices.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An iterative solver hit its iteration cap. Carries the best iterate found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best_iterate,
                   double best_objective)
      : Error(what),
        best_iterate_(std::move(best_iterate)),
        best_objective_(best_objective) {}

  const Eigen::VectorXd& best_iterate() const { return best_iterate_; }
  double best_objective() const { return best_objective_; }

 private:
  Eigen::VectorXd best_iterate_;
  double best_objective_;
};

}  // namespace favour

#endif  // FAVOUR_ERRORS_HPP_
