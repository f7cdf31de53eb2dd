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

#ifndef FAVOUR_BAYES_HPP_
#define FAVOUR_BAYES_HPP_

// Bayesian pairwise-preference learning: logit comparison likelihood,
// box-constrained MAP estimation with a Laplace posterior, incremental
// updating and the probit-approximated predictive probability.

#include <cstdint>
#include <vector>

#include "favour/features.hpp"

namespace favour {

// One stated preference r > q, stored as d = u(r) - u(q).
struct ComparisonExample {
  Vector d;
  // Provenance: who answered, which scenario, which pair of the ranking.
  int user = -1;
  int scenario = -1;
  int pair = -1;
};

using TrainingSet = std::vector<ComparisonExample>;

struct GaussianBelief {
  Vector mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }

  // N(0, I) in the given dimension.
  static GaussianBelief standard(Eigen::Index dim);

  // Throws ConfigError on shape mismatch, NumericError when the covariance is
  // not symmetric or has an eigenvalue below -1e-8.
  void validate() const;
};

struct BoxBounds {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }

  static BoxBounds unbounded(Eigen::Index dim);
  // All 23 quantitative weights in (-inf, 0], indicator weights free.
  static BoxBounds route_default();

  bool contains(const Vector& w) const;
  Vector project(const Vector& w) const;
  // Throws ConfigError if lower > upper anywhere or dimensions differ.
  void validate(Eigen::Index expected_dim) const;
};

// log(1 / (1 + exp(-x))), stable for large |x|.
double log_sigmoid(double x);
double sigmoid(double x);

// Pr(r > q | w) = 1 / (1 + exp(-w . d)).
double pair_probability(const Vector& d, const Vector& w);

// Un-normalised log posterior of the logit comparison model under a Gaussian
// prior, with analytic derivatives:
//   L(w)  = sum_t log s(w.d_t) - 1/2 (w - m)' P (w - m)
//   dL    = sum_t (1 - s_t) d_t - P (w - m)
//   d2L   = -sum_t s_t (1 - s_t) d_t d_t' - P
// where P is the prior precision.
class LogPosterior {
 public:
  LogPosterior(const TrainingSet& examples, const GaussianBelief& prior);

  Eigen::Index dim() const { return prior_mean_.size(); }
  std::size_t num_examples() const {
    return static_cast<std::size_t>(differences_.rows());
  }
  const Matrix& prior_precision() const { return precision_; }

  double value(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  Matrix hessian(const Vector& w) const;

  // Value plus optional gradient and Hessian in one pass.
  double evaluate(const Vector& w, Vector* gradient, Matrix* hessian) const;

 private:
  Matrix differences_;  // one comparison per row
  Vector prior_mean_;
  Matrix precision_;
};

struct MapOptions {
  int runs = 5;
  std::uint64_t seed = 1;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  // Multistart points are drawn uniformly in [-start_range, start_range]
  // intersected with the box.
  double start_range = 3.0;
};

struct MapDiagnostics {
  double log_posterior = 0.0;
  int best_run = -1;
  int iterations = 0;
  int converged_runs = 0;
};

// Laplace approximation of the posterior: the box-constrained mode of the log
// posterior (best of `runs` projected-Newton solves) with covariance
// (-H)^-1 of the unconstrained Hessian at that mode.
GaussianBelief map_estimate(const TrainingSet& examples,
                            const GaussianBelief& prior,
                            const BoxBounds& bounds,
                            const MapOptions& options = {},
                            MapDiagnostics* diagnostics = nullptr);

// Bayes-rule refinement of an existing belief with newly answered queries.
GaussianBelief incremental_update(const GaussianBelief& belief,
                                  const TrainingSet& new_examples,
                                  const BoxBounds& bounds,
                                  const MapOptions& options = {});

// s(lambda * mean' d) with lambda = (1 + pi d' cov d / 8)^(-1/2).
double predict_preference_d(const GaussianBelief& belief, const Vector& d);
double predict_preference(const GaussianBelief& belief, const Vector& fv_r,
                          const Vector& fv_q);

// KL(p || q) between two Gaussians.
double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q);

// Symmetrise and clamp eigenvalues from below.
Matrix floor_eigenvalues(const Matrix& m, double floor);

}  // namespace favour

#endif  // FAVOUR_BAYES_HPP_
