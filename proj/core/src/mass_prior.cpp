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

#include "favour/mass_prior.hpp"

#include "favour/errors.hpp"
#include "favour/parallel.hpp"

namespace favour {

GaussianBelief mpp_average(std::span<const GaussianBelief> posteriors) {
  if (posteriors.empty()) throw ConfigError("mpp_average needs K >= 1");
  const Eigen::Index n = posteriors.front().dim();
  for (const auto& p : posteriors) {
    if (p.dim() != n || p.cov.rows() != n || p.cov.cols() != n) {
      throw ConfigError("mpp_average: posterior dimensions differ");
    }
  }
  const auto k = static_cast<double>(posteriors.size());
  Vector mean = Vector::Zero(n);
  for (const auto& p : posteriors) mean += p.mean;
  mean /= k;
  Matrix cov = Matrix::Zero(n, n);
  for (const auto& p : posteriors) {
    const Vector c = p.mean - mean;
    cov.noalias() += c * c.transpose();
    cov += p.cov;
  }
  cov /= k;
  cov = 0.5 * (cov + cov.transpose());
  return {mean, cov};
}

MppResult mpp_refine(std::span<const TrainingSet> training_sets,
                     const BoxBounds& bounds, const MppConfig& config) {
  if (training_sets.empty()) throw ConfigError("mpp_refine needs K >= 1");
  if (!(config.kl_threshold > 0.0)) {
    throw ConfigError("mpp_refine: kl_threshold must be positive");
  }
  if (config.max_iterations < 1) {
    throw ConfigError("mpp_refine: max_iterations must be >= 1");
  }
  const Eigen::Index n = bounds.dim();
  bounds.validate(n);

  MppResult result;
  result.prior = GaussianBelief::standard(n);
  std::vector<GaussianBelief> posteriors(training_sets.size());

  for (int it = 1; it <= config.max_iterations; ++it) {
    parallel_for(training_sets.size(), config.workers, [&](std::size_t k) {
      try {
        posteriors[k] =
            map_estimate(training_sets[k], result.prior, bounds, config.map);
      } catch (const Error& e) {
        throw Error("MPP refinement: fit of user " + std::to_string(k) +
                    " failed: " + e.what());
      }
    });
    GaussianBelief next = mpp_average(posteriors);
    next.cov = floor_eigenvalues(next.cov, 1e-10);
    const double kl = gaussian_kl(next, result.prior);
    result.kl_trace.push_back(kl);
    result.prior = std::move(next);
    result.iterations = it;
    if (kl < config.kl_threshold) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace favour
