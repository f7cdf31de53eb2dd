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

#include "favour/features.hpp"

#include <cmath>
#include <sstream>

#include "favour/errors.hpp"

namespace favour {
namespace {

ModeSet modes_of(std::initializer_list<Mode> ms) {
  ModeSet set;
  for (Mode m : ms) set.set(static_cast<int>(m));
  return set;
}

constexpr std::array<std::string_view, kNumQuantitative> kQuantityNames = {
    "dist_car",         "dist_car_main_roads", "dist_walk",
    "dist_bike",        "dist_bike_infra",     "time_walk",
    "time_bike",        "time_drive",          "time_access_pt",
    "time_egress_pt",   "time_wait_pt",        "time_bus",
    "time_tram",        "time_metro",          "time_switch_park",
    "cost_drive",       "cost_parking",        "cost_pt",
    "mode_changes",     "uphill_bike",         "stops_bus",
    "stops_tram",       "stops_metro",
};

}  // namespace

ModeSet required_modes(Quantity q) {
  const ModeSet car = modes_of({Mode::kCar, Mode::kCarSharing});
  const ModeSet bike = modes_of({Mode::kBike, Mode::kBikeSharing});
  const ModeSet walk = modes_of({Mode::kWalk});
  const ModeSet pt = modes_of({Mode::kPublicTransport});
  switch (q) {
    case Quantity::kDistanceCar:
    case Quantity::kDistanceCarMainRoads:
    case Quantity::kTimeDrive:
    case Quantity::kCostDrive:
    case Quantity::kCostParking:
      return car;
    case Quantity::kDistanceBike:
    case Quantity::kDistanceBikeInfrastructure:
    case Quantity::kTimeBike:
    case Quantity::kUphillBike:
      return bike;
    case Quantity::kDistanceWalk:
    case Quantity::kTimeWalk:
      return walk;
    case Quantity::kTimeAccessPt:
    case Quantity::kTimeEgressPt:
    case Quantity::kTimeWaitPt:
    case Quantity::kTimeBus:
    case Quantity::kTimeTram:
    case Quantity::kTimeMetro:
    case Quantity::kCostPt:
    case Quantity::kStopsBus:
    case Quantity::kStopsTram:
    case Quantity::kStopsMetro:
      return pt;
    case Quantity::kTimeSwitchPark:
    case Quantity::kModeChanges:
      return ModeSet().set();
  }
  return ModeSet().set();
}

void RouteDescriptor::validate() const {
  if (modes.none()) throw InputError("route uses no transport mode");
  for (int j = 0; j < kNumQuantitative; ++j) {
    const double v = quantities[j];
    if (!std::isfinite(v) || v < 0.0) {
      std::ostringstream msg;
      msg << "route feature " << kQuantityNames[j]
          << " must be finite and non-negative, got " << v;
      throw InputError(msg.str());
    }
    if (v != 0.0 && (required_modes(static_cast<Quantity>(j)) & modes).none()) {
      std::ostringstream msg;
      msg << "route feature " << kQuantityNames[j]
          << " is non-zero but its mode is not used";
      throw InputError(msg.str());
    }
  }
}

std::string_view mode_name(Mode m) {
  static constexpr std::array<std::string_view, kNumModes> kNames = {
      "car", "car_sharing", "bike", "bike_sharing", "walk", "pt"};
  return kNames[static_cast<int>(m)];
}

std::string_view temperature_name(TemperatureBand t) {
  static constexpr std::array<std::string_view, kNumTemperatureBands> kNames =
      {"low", "medium", "high"};
  return kNames[static_cast<int>(t)];
}

TemperatureBand parse_temperature(std::string_view name) {
  if (name == "low") return TemperatureBand::kLow;
  if (name == "medium") return TemperatureBand::kMedium;
  if (name == "high") return TemperatureBand::kHigh;
  throw InputError("unknown temperature band '" + std::string(name) + "'");
}

int indicator_index(Mode m, const Situation& s) {
  return kNumWeatherStates * static_cast<int>(m) + s.weather_index();
}

const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> out;
    for (int m = 0; m < kNumModes; ++m) {
      for (int p = 0; p < 2; ++p) {
        for (int t = 0; t < kNumTemperatureBands; ++t) {
          const Situation s{p == 1, static_cast<TemperatureBand>(t)};
          out[indicator_index(static_cast<Mode>(m), s)] =
              std::string(mode_name(static_cast<Mode>(m))) +
              (p == 1 ? "|precip|" : "|dry|") +
              std::string(temperature_name(s.temperature));
        }
      }
    }
    for (int j = 0; j < kNumQuantitative; ++j) {
      out[kNumIndicators + j] = std::string(kQuantityNames[j]);
    }
    return out;
  }();
  return names;
}

std::vector<BasisFunction> identity_basis(std::size_t m) {
  return std::vector<BasisFunction>(m, [](double z) { return z; });
}

double edge_cost(std::span<const double> attributes, const Vector& weights,
                 std::span<const BasisFunction> basis) {
  if (attributes.size() != basis.size() ||
      static_cast<std::size_t>(weights.size()) != basis.size()) {
    std::ostringstream msg;
    msg << "edge_cost: " << attributes.size() << " attributes, "
        << weights.size() << " weights and " << basis.size()
        << " basis functions";
    throw ConfigError(msg.str());
  }
  double cost = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    cost += weights[static_cast<Eigen::Index>(j)] * basis[j](attributes[j]);
  }
  return cost;
}

Vector path_features(std::span<const std::vector<double>> edges,
                     std::span<const BasisFunction> basis) {
  Vector u = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& edge : edges) {
    if (edge.size() != basis.size()) {
      throw ConfigError("path_features: edge attribute count differs from "
                        "basis size");
    }
    for (std::size_t j = 0; j < basis.size(); ++j) {
      u[static_cast<Eigen::Index>(j)] += basis[j](edge[j]);
    }
  }
  return u;
}

Vector mode_weather_features(const RouteDescriptor& route,
                             const Situation& situation) {
  Vector m = Vector::Zero(kNumIndicators);
  for (int mode = 0; mode < kNumModes; ++mode) {
    if (route.modes.test(mode)) {
      m[indicator_index(static_cast<Mode>(mode), situation)] = 1.0;
    }
  }
  return m;
}

Vector route_features(const RouteDescriptor& route,
                      const Situation& situation) {
  Vector fv(kFeatureDim);
  fv.head(kNumIndicators) = mode_weather_features(route, situation);
  for (int j = 0; j < kNumQuantitative; ++j) {
    fv[kNumIndicators + j] = route.quantities[j];
  }
  return fv;
}

double route_utility(const Vector& features, const Vector& profile) {
  if (features.size() != profile.size()) {
    std::ostringstream msg;
    msg << "route_utility: feature dimension " << features.size()
        << " vs profile dimension " << profile.size();
    throw ConfigError(msg.str());
  }
  return profile.dot(features);
}

void validate_feature_vector(const Vector& fv) {
  if (fv.size() != kFeatureDim) {
    throw ConfigError("feature vector must have " +
                      std::to_string(kFeatureDim) + " components, got " +
                      std::to_string(fv.size()));
  }
  int ones = 0;
  int block = -1;
  for (int j = 0; j < kNumIndicators; ++j) {
    if (fv[j] == 1.0) {
      const int weather = j % kNumWeatherStates;
      if (block >= 0 && block != weather) {
        throw InputError("indicators span more than one weather state");
      }
      block = weather;
      ++ones;
    } else if (fv[j] != 0.0) {
      throw InputError("indicator component " + std::to_string(j) +
                       " is not binary");
    }
  }
  if (ones < 1 || ones > kNumModes) {
    throw InputError("feature vector must mark between 1 and 6 modes");
  }
  for (int j = kNumIndicators; j < kFeatureDim; ++j) {
    if (!std::isfinite(fv[j]) || fv[j] < 0.0) {
      throw InputError("quantitative component " + std::to_string(j) +
                       " must be finite and non-negative");
    }
  }
}

std::vector<std::pair<int, int>> ranking_pair_order(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

std::vector<Vector> comparisons_from_ranking(std::span<const Vector> ranked) {
  if (ranked.size() < 2) {
    throw InputError("a ranking needs at least two routes");
  }
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      if (ranked[i].size() != ranked[j].size()) {
        throw ConfigError("ranked routes have different dimensions");
      }
      if (ranked[i] == ranked[j]) {
        throw InputError("ranking contains two routes with identical "
                         "feature vectors");
      }
    }
  }
  std::vector<Vector> out;
  for (auto [i, j] : ranking_pair_order(static_cast<int>(ranked.size()))) {
    out.push_back(ranked[i] - ranked[j]);
  }
  return out;
}

}  // namespace favour
