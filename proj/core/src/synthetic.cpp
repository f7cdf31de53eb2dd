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

#include "favour/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "favour/errors.hpp"
#include "favour/json_io.hpp"

namespace favour {
namespace {

constexpr double kMaxTime = 60.0;
constexpr double kMaxDistance = 15.0;
constexpr double kMaxCost = 10.0;
constexpr double kMaxCount = 5.0;

ModeSet make_modes(std::initializer_list<Mode> ms) {
  ModeSet s;
  for (Mode m : ms) s.set(static_cast<int>(m));
  return s;
}

// Mode combinations a respondent can be offered.
const std::vector<ModeSet>& route_catalogue() {
  static const std::vector<ModeSet> catalogue = {
      make_modes({Mode::kWalk}),
      make_modes({Mode::kPublicTransport, Mode::kWalk}),
      make_modes({Mode::kCar}),
      make_modes({Mode::kCarSharing, Mode::kWalk}),
      make_modes({Mode::kBike}),
      make_modes({Mode::kBikeSharing, Mode::kWalk}),
      make_modes({Mode::kCar, Mode::kPublicTransport, Mode::kWalk}),
      make_modes({Mode::kBike, Mode::kPublicTransport}),
  };
  return catalogue;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Speed-like factor: the correlation knob shrinks its spread around `mid`.
double factor(Rng& rng, double lo, double hi, double correlation) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo) * (1.0 - correlation);
  return mid + uniform(rng, -half, half);
}

void add_walk(RouteDescriptor& r, double minutes) {
  r[Quantity::kTimeWalk] += minutes;
  r[Quantity::kDistanceWalk] += minutes / 12.0;
}

void add_car(RouteDescriptor& r, double km, bool shared, double corr,
             Rng& rng) {
  const double dist = km * factor(rng, 1.05, 1.35, corr);
  r[Quantity::kDistanceCar] += dist;
  r[Quantity::kDistanceCarMainRoads] += dist * uniform(rng, 0.3, 0.9);
  r[Quantity::kTimeDrive] += dist * factor(rng, 1.5, 3.5, corr);
  r[Quantity::kCostDrive] += dist * (shared ? 0.35 : 0.2);
  if (!shared) {
    r[Quantity::kTimeSwitchPark] += uniform(rng, 1.0, 10.0);
    if (uniform(rng, 0.0, 1.0) < 0.6) {
      r[Quantity::kCostParking] += uniform(rng, 0.5, 6.0);
    }
  }
}

void add_bike(RouteDescriptor& r, double km, double corr, Rng& rng) {
  const double dist = km * factor(rng, 1.0, 1.2, corr);
  r[Quantity::kDistanceBike] += dist;
  r[Quantity::kDistanceBikeInfrastructure] += dist * uniform(rng, 0.1, 1.0);
  r[Quantity::kTimeBike] += dist * factor(rng, 3.0, 5.0, corr);
  r[Quantity::kUphillBike] += uniform(rng, 0.0, 5.0);
  r[Quantity::kTimeSwitchPark] += uniform(rng, 0.0, 3.0);
}

void add_pt(RouteDescriptor& r, double km, double corr, Rng& rng) {
  r[Quantity::kTimeAccessPt] += uniform(rng, 1.0, 6.0);
  r[Quantity::kTimeEgressPt] += uniform(rng, 1.0, 6.0);
  r[Quantity::kTimeWaitPt] += uniform(rng, 1.0, 10.0);
  r[Quantity::kCostPt] += uniform(rng, 0.0, 1.0) < 0.3 ? 0.0 : 2.4;
  const double ride = km * factor(rng, 2.0, 3.5, corr);
  // Split the ride over a non-empty subset of bus / tram / metro.
  std::array<double, 3> share{};
  int used = 0;
  while (used == 0) {
    for (double& s : share) {
      s = uniform(rng, 0.0, 1.0) < 0.5 ? uniform(rng, 0.2, 1.0) : 0.0;
      used += s > 0.0 ? 1 : 0;
    }
  }
  const double total = share[0] + share[1] + share[2];
  constexpr std::array<Quantity, 3> kTime = {
      Quantity::kTimeBus, Quantity::kTimeTram, Quantity::kTimeMetro};
  constexpr std::array<Quantity, 3> kStops = {
      Quantity::kStopsBus, Quantity::kStopsTram, Quantity::kStopsMetro};
  for (int i = 0; i < 3; ++i) {
    if (share[i] == 0.0) continue;
    const double minutes = ride * share[i] / total;
    r[kTime[i]] += minutes;
    r[kStops[i]] += std::max(1.0, std::round(minutes / 2.5));
  }
  r[Quantity::kModeChanges] += used - 1;
}

void clip_to_ranges(RouteDescriptor& r) {
  for (int j = 0; j < kNumQuantitative; ++j) {
    const auto q = static_cast<Quantity>(j);
    double cap = kMaxCount;
    if (q <= Quantity::kDistanceBikeInfrastructure) {
      cap = kMaxDistance;
    } else if (q <= Quantity::kTimeSwitchPark) {
      cap = kMaxTime;
    } else if (q <= Quantity::kCostPt) {
      cap = kMaxCost;
    }
    r.quantities[j] = std::clamp(r.quantities[j], 0.0, cap);
  }
}

Vector draw_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::normal_distribution<double> normal;
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean + es.eigenvectors() * sd.cwiseProduct(z);
}

Situation random_situation(Rng& rng) {
  Situation s;
  s.precipitation = uniform(rng, 0.0, 1.0) < 0.5;
  s.temperature = static_cast<TemperatureBand>(
      std::uniform_int_distribution<int>(0, 2)(rng));
  return s;
}

}  // namespace

// --- PopulationSpec ---------------------------------------------------------

Vector PopulationSpec::default_population_mean() {
  Vector mean = Vector::Zero(kFeatureDim);
  // Mode base preference, added penalty under precipitation, and the effect
  // of each temperature band.
  constexpr std::array<double, kNumModes> kBase = {0.6, -0.8, 0.8,
                                                   -0.4, 0.4, 1.0};
  constexpr std::array<double, kNumModes> kRain = {1.2, 0.8, -3.2,
                                                   -3.2, -1.6, 0.6};
  constexpr std::array<std::array<double, 3>, kNumModes> kTemp = {{
      {0.6, 0.0, -0.4},
      {0.4, 0.0, -0.4},
      {-1.6, 0.6, 0.0},
      {-1.6, 0.6, 0.0},
      {-1.0, 0.4, -0.2},
      {0.4, 0.0, -0.6},
  }};
  for (int m = 0; m < kNumModes; ++m) {
    for (int p = 0; p < 2; ++p) {
      for (int t = 0; t < kNumTemperatureBands; ++t) {
        const Situation s{p == 1, static_cast<TemperatureBand>(t)};
        mean[indicator_index(static_cast<Mode>(m), s)] =
            kBase[m] + p * kRain[m] + kTemp[m][t];
      }
    }
  }
  auto set = [&](Quantity q, double v) { mean[quantity_index(q)] = v; };
  set(Quantity::kDistanceCar, -0.04);
  set(Quantity::kDistanceCarMainRoads, -0.02);
  set(Quantity::kDistanceWalk, -0.1);
  set(Quantity::kDistanceBike, -0.1);
  set(Quantity::kDistanceBikeInfrastructure, -0.02);
  set(Quantity::kTimeWalk, -0.16);
  set(Quantity::kTimeBike, -0.12);
  set(Quantity::kTimeDrive, -0.12);
  set(Quantity::kTimeAccessPt, -0.16);
  set(Quantity::kTimeEgressPt, -0.16);
  set(Quantity::kTimeWaitPt, -0.2);
  set(Quantity::kTimeBus, -0.12);
  set(Quantity::kTimeTram, -0.1);
  set(Quantity::kTimeMetro, -0.08);
  set(Quantity::kTimeSwitchPark, -0.16);
  set(Quantity::kCostDrive, -0.5);
  set(Quantity::kCostParking, -0.6);
  set(Quantity::kCostPt, -0.4);
  set(Quantity::kModeChanges, -0.6);
  set(Quantity::kUphillBike, -0.4);
  set(Quantity::kStopsBus, -0.1);
  set(Quantity::kStopsTram, -0.1);
  set(Quantity::kStopsMetro, -0.06);
  return mean;
}

Matrix PopulationSpec::default_population_cov() {
  Vector diag(kFeatureDim);
  diag.head(kNumIndicators).setConstant(0.25);
  diag.tail(kNumQuantitative).setConstant(0.01);
  return diag.asDiagonal();
}

PopulationSpec PopulationSpec::defaults() {
  PopulationSpec spec;
  spec.population_mean = default_population_mean();
  spec.population_cov = default_population_cov();
  return spec;
}

void PopulationSpec::validate() const {
  if (n_users < 1) throw ConfigError("n_users must be positive");
  if (scenarios_per_user < 2 || scenarios_per_user % 2 != 0) {
    throw ConfigError("scenarios_per_user must be a positive even number");
  }
  if (alternatives_per_scenario < 2 ||
      alternatives_per_scenario > static_cast<int>(route_catalogue().size())) {
    throw ConfigError("alternatives_per_scenario must be in [2, 8]");
  }
  if (population_mean.size() != kFeatureDim ||
      population_cov.rows() != kFeatureDim ||
      population_cov.cols() != kFeatureDim) {
    throw ConfigError("population mean/cov must be 59-dimensional");
  }
  GaussianBelief{population_mean, population_cov}.validate();
  if (!(choice_noise_scale >= 0.0) || !std::isfinite(choice_noise_scale)) {
    throw ConfigError("choice_noise_scale must be finite and >= 0");
  }
  if (!(feature_correlation >= 0.0 && feature_correlation <= 1.0)) {
    throw ConfigError("feature_correlation must lie in [0, 1]");
  }
}

// --- Generation -------------------------------------------------------------

RouteDescriptor sample_route(const ModeSet& modes, double km,
                             double correlation, Rng& rng) {
  RouteDescriptor r;
  r.modes = modes;
  auto has = [&](Mode m) { return modes.test(static_cast<int>(m)); };
  const bool pt = has(Mode::kPublicTransport);
  const bool car = has(Mode::kCar) || has(Mode::kCarSharing);
  const bool bike = has(Mode::kBike) || has(Mode::kBikeSharing);
  const int legs = static_cast<int>(pt) + static_cast<int>(car) +
                   static_cast<int>(bike);

  if (legs == 0) {
    // Walking only.
    add_walk(r, km * 12.0 * factor(rng, 0.95, 1.15, correlation));
  } else {
    // Split the trip over the motorised / cycling legs.
    const double first = legs > 1 ? uniform(rng, 0.3, 0.7) : 1.0;
    double remaining = km;
    if (car) {
      add_car(r, km * first, has(Mode::kCarSharing), correlation, rng);
      remaining -= km * first;
    }
    if (bike) {
      const double part = pt ? km * first : remaining;
      add_bike(r, part, correlation, rng);
      remaining -= part;
    }
    if (pt) add_pt(r, std::max(remaining, 0.5), correlation, rng);
    if (has(Mode::kWalk)) add_walk(r, uniform(rng, 2.0, 10.0));
    r[Quantity::kModeChanges] += modes.count() - 1;
    if (has(Mode::kBikeSharing)) {
      r[Quantity::kTimeSwitchPark] += uniform(rng, 1.0, 4.0);
    }
  }
  clip_to_ranges(r);
  return r;
}

std::vector<Vector> sample_alternatives(int n, const Situation& situation,
                                        double correlation, Rng& rng) {
  const auto& catalogue = route_catalogue();
  const double km = uniform(rng, 1.5, 10.0);
  std::vector<int> options(catalogue.size());
  std::iota(options.begin(), options.end(), 0);
  // Walking-only alternatives are offered for short trips only.
  if (km > 4.0) options.erase(options.begin());
  std::shuffle(options.begin(), options.end(), rng);
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) {
    const auto& modes = catalogue[static_cast<std::size_t>(
        options[static_cast<std::size_t>(i) % options.size()])];
    out.push_back(route_features(sample_route(modes, km, correlation, rng),
                                 situation));
  }
  return out;
}

std::vector<int> sample_ranking(const std::vector<Vector>& alternatives,
                                const Vector& profile, double noise_scale,
                                Rng& rng) {
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  std::vector<double> score(alternatives.size());
  for (std::size_t i = 0; i < alternatives.size(); ++i) {
    score[i] = profile.dot(alternatives[i]);
    if (noise_scale > 0.0) score[i] += noise_scale * gumbel(rng);
  }
  std::vector<int> order(alternatives.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return score[a] > score[b]; });
  return order;
}

ChoiceDataset sample_population(const PopulationSpec& spec) {
  spec.validate();
  ChoiceDataset data;
  data.spec = spec;
  data.spec_hash = spec_hash(spec);
  const BoxBounds box = BoxBounds::route_default();
  const int base = spec.scenarios_per_user / 2;
  for (int u = 0; u < spec.n_users; ++u) {
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(u)}));
    UserData user;
    user.id = u;
    const Vector truth =
        box.project(draw_gaussian(spec.population_mean, spec.population_cov,
                                  rng));
    user.true_profile = truth;
    for (int b = 0; b < base; ++b) {
      Scenario first;
      first.id = 2 * b;
      first.situation = random_situation(rng);
      // Re-draw until the alternatives are pairwise distinct.
      do {
        first.alternatives = sample_alternatives(
            spec.alternatives_per_scenario, first.situation,
            spec.feature_correlation, rng);
      } while ([&] {
        for (std::size_t i = 0; i < first.alternatives.size(); ++i)
          for (std::size_t j = i + 1; j < first.alternatives.size(); ++j)
            if (first.alternatives[i] == first.alternatives[j]) return true;
        return false;
      }());
      Scenario second;
      second.id = 2 * b + 1;
      second.situation = first.situation;
      second.situation.precipitation = !first.situation.precipitation;
      for (const Vector& fv : first.alternatives) {
        Vector moved = Vector::Zero(kFeatureDim);
        moved.tail(kNumQuantitative) = fv.tail(kNumQuantitative);
        for (int m = 0; m < kNumModes; ++m) {
          if (fv[indicator_index(static_cast<Mode>(m), first.situation)] ==
              1.0) {
            moved[indicator_index(static_cast<Mode>(m), second.situation)] =
                1.0;
          }
        }
        second.alternatives.push_back(moved);
      }
      first.ranking =
          sample_ranking(first.alternatives, truth, spec.choice_noise_scale, rng);
      second.ranking = sample_ranking(second.alternatives, truth,
                                      spec.choice_noise_scale, rng);
      user.scenarios.push_back(std::move(first));
      user.scenarios.push_back(std::move(second));
    }
    data.users.push_back(std::move(user));
  }
  return data;
}

TrainingSet user_comparisons(const UserData& user) {
  TrainingSet out;
  for (const Scenario& sc : user.scenarios) {
    std::vector<Vector> ranked;
    for (int idx : sc.ranking) {
      ranked.push_back(sc.alternatives.at(static_cast<std::size_t>(idx)));
    }
    const auto diffs = comparisons_from_ranking(ranked);
    for (std::size_t p = 0; p < diffs.size(); ++p) {
      out.push_back({diffs[p], user.id, sc.id, static_cast<int>(p)});
    }
  }
  return out;
}

namespace {

template <class Decide>
double oracle_accuracy_impl(const Vector& true_profile, int n_pairs,
                            std::uint64_t seed, Decide decide) {
  if (n_pairs < 1) throw ConfigError("oracle_accuracy needs n_pairs >= 1");
  Rng rng(seed);
  int correct = 0;
  for (int i = 0; i < n_pairs; ++i) {
    const Situation s = random_situation(rng);
    std::vector<Vector> alts;
    do {
      alts = sample_alternatives(2, s, 0.5, rng);
    } while (alts[0] == alts[1]);
    const Vector d = alts[0] - alts[1];
    const double truth = true_profile.dot(d);
    // 1: first route wins, 0: second, 0.5: undecided.
    const double vote = decide(d);
    bool pick_first;
    if (vote == 0.5) {
      pick_first = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    } else {
      pick_first = vote > 0.5;
    }
    if (truth != 0.0 && pick_first == (truth > 0.0)) ++correct;
  }
  return static_cast<double>(correct) / n_pairs;
}

}  // namespace

double oracle_accuracy(const Vector& profile, const Vector& true_profile,
                       int n_pairs, std::uint64_t seed) {
  if (profile.size() != true_profile.size()) {
    throw ConfigError("oracle_accuracy: dimension mismatch");
  }
  return oracle_accuracy_impl(true_profile, n_pairs, seed,
                              [&](const Vector& d) {
                                const double u = profile.dot(d);
                                return u > 0.0 ? 1.0 : (u < 0.0 ? 0.0 : 0.5);
                              });
}

double oracle_accuracy(const GaussianBelief& belief, const Vector& true_profile,
                       int n_pairs, std::uint64_t seed) {
  return oracle_accuracy_impl(true_profile, n_pairs, seed,
                              [&](const Vector& d) {
                                return predict_preference_d(belief, d);
                              });
}

}  // namespace favour
