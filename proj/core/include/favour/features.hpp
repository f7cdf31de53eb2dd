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

#ifndef FAVOUR_FEATURES_HPP_
#define FAVOUR_FEATURES_HPP_

// Route feature model: mode/weather indicators, the 23 quantitative route
// features and the linear route utility U(r) = w . u(r).
//
// Layout of the 59-dimensional feature vector (0-based):
//   [0, 36)   indicator for (mode, weather state), mode-major:
//             index = 6 * mode + weather, weather = 3 * precipitation + band
//   [36, 59)  quantitative features in the order of the Quantity enum.

#include <array>
#include <bitset>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace favour {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr int kNumModes = 6;
inline constexpr int kNumTemperatureBands = 3;
inline constexpr int kNumWeatherStates = 2 * kNumTemperatureBands;
inline constexpr int kNumIndicators = kNumModes * kNumWeatherStates;
inline constexpr int kNumQuantitative = 23;
inline constexpr int kFeatureDim = kNumIndicators + kNumQuantitative;

enum class Mode : int {
  kCar = 0,
  kCarSharing,
  kBike,
  kBikeSharing,
  kWalk,
  kPublicTransport,
};

enum class TemperatureBand : int { kLow = 0, kMedium, kHigh };

struct Situation {
  bool precipitation = false;
  TemperatureBand temperature = TemperatureBand::kMedium;

  int weather_index() const {
    return 3 * static_cast<int>(precipitation) + static_cast<int>(temperature);
  }
  bool operator==(const Situation&) const = default;
};

// Quantitative route features (distance, time, cost, miscellaneous groups).
enum class Quantity : int {
  kDistanceCar = 0,
  kDistanceCarMainRoads,
  kDistanceWalk,
  kDistanceBike,
  kDistanceBikeInfrastructure,
  kTimeWalk,
  kTimeBike,
  kTimeDrive,
  kTimeAccessPt,
  kTimeEgressPt,
  kTimeWaitPt,
  kTimeBus,
  kTimeTram,
  kTimeMetro,
  kTimeSwitchPark,
  kCostDrive,
  kCostParking,
  kCostPt,
  kModeChanges,
  kUphillBike,
  kStopsBus,
  kStopsTram,
  kStopsMetro,
};

using ModeSet = std::bitset<kNumModes>;

struct RouteDescriptor {
  ModeSet modes;
  std::array<double, kNumQuantitative> quantities{};

  bool uses(Mode m) const { return modes.test(static_cast<int>(m)); }
  double& operator[](Quantity q) { return quantities[static_cast<int>(q)]; }
  double operator[](Quantity q) const {
    return quantities[static_cast<int>(q)];
  }

  // Throws InputError when the descriptor violates the feature invariants
  // (no mode, negative or non-finite quantity, mode-specific quantity set
  // for an unused mode).
  void validate() const;
};

// Modes whose presence allows a non-zero value of the given quantity.
ModeSet required_modes(Quantity q);

std::string_view mode_name(Mode m);
std::string_view temperature_name(TemperatureBand t);
TemperatureBand parse_temperature(std::string_view name);

int indicator_index(Mode m, const Situation& s);
inline int quantity_index(Quantity q) {
  return kNumIndicators + static_cast<int>(q);
}

// Human-readable names of the 59 components, in layout order.
const std::array<std::string, kFeatureDim>& feature_names();

// --- Edge-level cost model ---------------------------------------------------

// Scalar basis cost function c_j : R -> R+.
using BasisFunction = std::function<double(double)>;

// m identity basis functions.
std::vector<BasisFunction> identity_basis(std::size_t m);

// sum_j w_j c_j(z_j) for one edge.
double edge_cost(std::span<const double> attributes, const Vector& weights,
                 std::span<const BasisFunction> basis);

// u_j(r) = sum_i c_j(z_{i,j}) over the edges of a path.
Vector path_features(std::span<const std::vector<double>> edges,
                     std::span<const BasisFunction> basis);

// --- Route-level features ----------------------------------------------------

// The 36 indicator components for a route in a situation.
Vector mode_weather_features(const RouteDescriptor& route,
                             const Situation& situation);

// Full 59-component feature vector.
Vector route_features(const RouteDescriptor& route, const Situation& situation);

// w . fv
double route_utility(const Vector& features, const Vector& profile);

// Checks the FeatureVector invariants (dimension, binary indicators within a
// single weather block, 1..6 active modes, non-negative finite quantities).
void validate_feature_vector(const Vector& features);

// Expands a best-to-worst ranking into pairwise difference vectors
// d = u(preferred) - u(rejected), in order (0,1), (0,2), ..., (1,2), ...
// Throws InputError when two ranked routes have identical features.
std::vector<Vector> comparisons_from_ranking(std::span<const Vector> ranked);

// Index pairs (preferred, rejected) emitted by comparisons_from_ranking.
std::vector<std::pair<int, int>> ranking_pair_order(int n);

}  // namespace favour

#endif  // FAVOUR_FEATURES_HPP_
