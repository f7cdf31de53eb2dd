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

#ifndef FAVOUR_MASS_PRIOR_HPP_
#define FAVOUR_MASS_PRIOR_HPP_

// Mass-preference prior (MPP): a Gaussian summarising the posteriors of a
// population of users, refined by alternating per-user inference and
// averaging until consecutive priors agree in KL divergence.

#include <span>
#include <vector>

#include "favour/bayes.hpp"

namespace favour {

// mean = (1/K) sum mu_k
// cov  = (1/K) sum [(mu_k - mean)(mu_k - mean)' + Sigma_k]
GaussianBelief mpp_average(std::span<const GaussianBelief> posteriors);

struct MppConfig {
  double kl_threshold = 1e-3;
  int max_iterations = 50;
  MapOptions map;
  int workers = 1;
};

struct MppResult {
  GaussianBelief prior;
  int iterations = 0;
  // KL(MPP_j || MPP_{j-1}) for j = 1..iterations.
  std::vector<double> kl_trace;
  bool converged = false;
};

// Starts from N(0, I) in the dimension of `bounds`.
MppResult mpp_refine(std::span<const TrainingSet> training_sets,
                     const BoxBounds& bounds, const MppConfig& config = {});

}  // namespace favour

#endif  // FAVOUR_MASS_PRIOR_HPP_
