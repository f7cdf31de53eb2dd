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

#ifndef FAVOUR_SYNTHETIC_HPP_
#define FAVOUR_SYNTHETIC_HPP_

// Reproducible synthetic route-choice populations with known ground-truth
// profiles: ternary ranked scenarios, each base scenario replicated under the
// opposite precipitation state.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "favour/bayes.hpp"
#include "favour/random.hpp"

namespace favour {

struct PopulationSpec {
  int n_users = 40;
  // Total per user, base scenarios x 2 weather replicas; must be even.
  int scenarios_per_user = 10;
  int alternatives_per_scenario = 3;
  Vector population_mean;
  Matrix population_cov;
  double choice_noise_scale = 1.0;
  // 0: route speeds vary freely, 1: time strictly proportional to distance.
  double feature_correlation = 0.5;
  std::uint64_t seed = 1;

  // The documented default population (mean, 0.25 I / 0.01 I covariance).
  static PopulationSpec defaults();
  static Vector default_population_mean();
  static Matrix default_population_cov();

  void validate() const;
};

struct Scenario {
  int id = 0;
  Situation situation;
  std::vector<Vector> alternatives;
  // Alternative indices from best to worst.
  std::vector<int> ranking;
};

struct UserData {
  int id = 0;
  std::optional<Vector> true_profile;
  std::vector<Scenario> scenarios;
};

struct ChoiceDataset {
  PopulationSpec spec;
  std::string spec_hash;
  std::vector<UserData> users;
};

// Draws one route with the given modes for a trip of `distance_km`.
RouteDescriptor sample_route(const ModeSet& modes, double distance_km,
                             double feature_correlation, Rng& rng);

// Three (or n) distinct routes for one situation, as feature vectors.
std::vector<Vector> sample_alternatives(int n, const Situation& situation,
                                        double feature_correlation, Rng& rng);

// Plackett-Luce ranking: sort of utility + noise_scale * Gumbel noise.
std::vector<int> sample_ranking(const std::vector<Vector>& alternatives,
                                const Vector& profile, double noise_scale,
                                Rng& rng);

ChoiceDataset sample_population(const PopulationSpec& spec);

// Binary comparisons of one user, three per ternary scenario, with
// provenance tags.
TrainingSet user_comparisons(const UserData& user);

// Fraction of freshly sampled route pairs on which `profile` picks the same
// winner as `true_profile` (ties in `profile` broken at random).
double oracle_accuracy(const Vector& profile, const Vector& true_profile,
                       int n_pairs, std::uint64_t seed);
// As above, deciding with predict_preference > 0.5.
double oracle_accuracy(const GaussianBelief& belief, const Vector& true_profile,
                       int n_pairs, std::uint64_t seed);

}  // namespace favour

#endif  // FAVOUR_SYNTHETIC_HPP_
