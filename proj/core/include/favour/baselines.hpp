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

#ifndef FAVOUR_BASELINES_HPP_
#define FAVOUR_BASELINES_HPP_

// Comparison methods: a mixed (random-coefficient) multinomial logit with
// AIC variable selection and individual-level parameters, and a pooled
// maximum-likelihood prior for Bayesian individualisation.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "favour/bayes.hpp"
#include "favour/synthetic.hpp"

namespace favour {

// One discrete choice: alternatives are the rows of `alternatives`.
struct ChoiceObservation {
  Matrix alternatives;
  int chosen = 0;
};

using UserObservations = std::vector<ChoiceObservation>;

// Exploded ranking: choice of the best among all, then of the best among the
// remaining ones, and so on (n - 1 observations for n alternatives).
UserObservations observations_from_ranking(const Scenario& scenario);
UserObservations observations_from_user(const UserData& user);
// A comparison d = u(r) - u(q) as a binary choice between rows d and 0.
UserObservations observations_from_comparisons(const TrainingSet& examples);

// Softmax of the alternative utilities.
Vector mnl_probability(const ChoiceObservation& obs, const Vector& w);

struct MixedLogitModel {
  Vector mu;
  Vector sigma;
  // Coordinates with a free (mu, sigma) pair.
  std::vector<bool> selected;
  double log_likelihood = 0.0;
  // Simulated log-likelihood after each accepted optimiser step.
  std::vector<double> trace;
  bool converged = false;
  // Set when a degenerate input forced a fallback; see `note`.
  bool flagged = false;
  std::string note;

  Eigen::Index dim() const { return mu.size(); }
  int num_selected() const;
  // 2 * (#selected) free parameters, or 1 per selected coordinate when the
  // standard deviations were held at zero.
  int num_parameters(bool sigma_free = true) const;

  static MixedLogitModel empty(Eigen::Index dim);
  static MixedLogitModel all_selected(Eigen::Index dim, double sigma0);
};

// Standard-normal base draws shared by every likelihood evaluation
// (common random numbers): draws[u] is dim x B.
struct SimulationDraws {
  std::vector<Matrix> draws;
  int num_draws() const {
    return draws.empty() ? 0 : static_cast<int>(draws.front().cols());
  }
};

SimulationDraws make_draws(std::size_t num_users, Eigen::Index dim, int draws,
                           std::uint64_t seed);

// log prod_k P(chosen_k | w) for many profiles at once (columns of `w`).
Vector log_choice_probability(const UserObservations& obs, const Matrix& w);

// sum_u log[(1/B) sum_b prod_k P(y_k | w_ub)], w_ub = mu + sigma .* xi_ub.
double simulated_log_likelihood(std::span<const UserObservations> data,
                                const MixedLogitModel& model,
                                const SimulationDraws& draws);

struct SmleOptions {
  int draws = 2000;
  std::uint64_t seed = 1;
  int max_iterations = 1000;
  // Relative to max(1, |negative log-likelihood|).
  double gradient_tolerance = 1e-6;
  // Hold sigma at zero (plain multinomial logit through the simulator).
  bool fix_sigma_zero = false;
  // aic_select only: candidates per forward step that get a full
  // (mu, sigma) AIC evaluation after ranking by their score statistic, and
  // the gradient tolerance of the intermediate joint refits.
  int screening_candidates = 5;
  double selection_tolerance = 1e-5;
};

// Simulated maximum likelihood over the selected coordinates of `initial`.
// Unselected coordinates are held at mu = 0, sigma = 0. With no observations
// the initial model is returned unchanged and flagged.
MixedLogitModel smle_fit(std::span<const UserObservations> data,
                         const MixedLogitModel& initial,
                         const SmleOptions& options = {});
// Same, reusing precomputed draws.
MixedLogitModel smle_fit(std::span<const UserObservations> data,
                         const MixedLogitModel& initial,
                         const SimulationDraws& draws,
                         const SmleOptions& options);

// Plain multinomial-logit MLE by Newton's method on the selected coordinates.
Vector mnl_fit(std::span<const UserObservations> data,
               const std::vector<bool>& selected, int max_iterations = 100,
               double tolerance = 1e-10);

struct AicResult {
  MixedLogitModel model;
  double aic = 0.0;
  double empty_aic = 0.0;
  double forward_aic = 0.0;
  std::vector<bool> forward_selected;
};

double aic(double log_likelihood, int num_parameters);

// Greedy forward selection, then alternating single-variable deletions and
// additions while the AIC improves. Candidates are screened by optimising the
// new (mu_j, sigma_j) with the current model held fixed; accepted moves are
// refitted jointly. A candidate whose column duplicates a lower-index
// candidate in every observation is never eligible, so exact ties go to the
// lower feature index.
AicResult aic_select(std::span<const UserObservations> data,
                     const std::vector<bool>& candidates,
                     const SmleOptions& options = {});

// Excluded coordinates get mu = 0 and sigma = median sigma of the selected
// ones (1.0 and flagged when nothing is selected); all become selected.
MixedLogitModel reintroduce_excluded(const MixedLogitModel& model);

struct IndividualEstimate {
  Vector profile;
  double effective_sample_size = 0.0;
  bool fallback = false;
};

// w = sum_b g_b w_b, w_b ~ N(mean, cov), g_b proportional to the likelihood
// of the user's choices under w_b.
IndividualEstimate individual_parameters(const GaussianBelief& population,
                                         const UserObservations& user,
                                         int draws, std::uint64_t seed);
IndividualEstimate individual_parameters(const MixedLogitModel& model,
                                         const UserObservations& user,
                                         int draws, std::uint64_t seed);

struct MlPriorResult {
  GaussianBelief prior;
  // Coordinates whose comparison differences are identically zero.
  std::vector<bool> uninformative;
};

// Pooled logit MLE over all training users' comparisons with diagonal
// variances from the inverse observed information, floored at 1e-6.
MlPriorResult ml_prior_benchmark(std::span<const TrainingSet> training_users,
                                 const BoxBounds& bounds,
                                 const MapOptions& options = {});

}  // namespace favour

#endif  // FAVOUR_BASELINES_HPP_
