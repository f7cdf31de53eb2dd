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

#include "favour/json_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "favour/errors.hpp"

namespace favour {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("expected a JSON number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out.push_back(vector_to_json(m.row(r).transpose()));
  }
  return out;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(r)]);
    if (row.size() != cols) throw InputError("ragged matrix in JSON");
    m.row(r) = row.transpose();
  }
  return m;
}

Json belief_to_json(const GaussianBelief& b) {
  return {{"mean", vector_to_json(b.mean)}, {"cov", matrix_to_json(b.cov)}};
}

GaussianBelief belief_from_json(const Json& j) {
  if (!j.contains("mean") || !j.contains("cov")) {
    throw InputError("belief JSON needs 'mean' and 'cov'");
  }
  GaussianBelief b{vector_from_json(j.at("mean")),
                   matrix_from_json(j.at("cov"))};
  if (b.cov.rows() != b.dim() || b.cov.cols() != b.dim()) {
    throw InputError("belief JSON: covariance shape does not match mean");
  }
  return b;
}

Json spec_to_json(const PopulationSpec& spec) {
  return {
      {"n_users", spec.n_users},
      {"scenarios_per_user", spec.scenarios_per_user},
      {"alternatives_per_scenario", spec.alternatives_per_scenario},
      {"population_mean", vector_to_json(spec.population_mean)},
      {"population_cov", matrix_to_json(spec.population_cov)},
      {"choice_noise_scale", spec.choice_noise_scale},
      {"feature_correlation", spec.feature_correlation},
      {"seed", spec.seed},
  };
}

PopulationSpec spec_from_json(const Json& j) {
  PopulationSpec spec = PopulationSpec::defaults();
  if (!j.is_object()) throw InputError("population spec must be an object");
  spec.n_users = j.value("n_users", spec.n_users);
  spec.scenarios_per_user = j.value("scenarios_per_user", spec.scenarios_per_user);
  spec.alternatives_per_scenario =
      j.value("alternatives_per_scenario", spec.alternatives_per_scenario);
  if (j.contains("population_mean")) {
    spec.population_mean = vector_from_json(j.at("population_mean"));
  }
  if (j.contains("population_cov")) {
    spec.population_cov = matrix_from_json(j.at("population_cov"));
  }
  spec.choice_noise_scale = j.value("choice_noise_scale", spec.choice_noise_scale);
  spec.feature_correlation =
      j.value("feature_correlation", spec.feature_correlation);
  spec.seed = j.value("seed", spec.seed);
  return spec;
}

std::string spec_hash(const PopulationSpec& spec) {
  const std::string text = spec_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json dataset_to_json(const ChoiceDataset& data) {
  Json users = Json::array();
  for (const UserData& u : data.users) {
    Json scenarios = Json::array();
    for (const Scenario& s : u.scenarios) {
      Json alts = Json::array();
      for (const Vector& a : s.alternatives) alts.push_back(vector_to_json(a));
      scenarios.push_back({
          {"id", s.id},
          {"situation",
           {{"precipitation", s.situation.precipitation},
            {"temperature",
             std::string(temperature_name(s.situation.temperature))}}},
          {"alternatives", std::move(alts)},
          {"ranking", s.ranking},
      });
    }
    Json user = {{"id", u.id}, {"scenarios", std::move(scenarios)}};
    if (u.true_profile) user["true_profile"] = vector_to_json(*u.true_profile);
    users.push_back(std::move(user));
  }
  return {
      {"spec", spec_to_json(data.spec)},
      {"metadata", {{"seed", data.spec.seed}, {"spec_hash", data.spec_hash}}},
      {"users", std::move(users)},
  };
}

namespace {

ChoiceDataset parse_dataset(const Json& j) {
  ChoiceDataset data;
  data.spec = j.contains("spec") ? spec_from_json(j.at("spec"))
                                 : PopulationSpec::defaults();
  if (j.contains("metadata")) {
    data.spec_hash = j.at("metadata").value("spec_hash", std::string());
  }
  if (!j.contains("users") || !j.at("users").is_array()) {
    throw InputError("dataset JSON needs a 'users' array");
  }
  for (const Json& ju : j.at("users")) {
    UserData u;
    u.id = ju.at("id").get<int>();
    if (ju.contains("true_profile")) {
      u.true_profile = vector_from_json(ju.at("true_profile"));
    }
    for (const Json& js : ju.at("scenarios")) {
      Scenario s;
      s.id = js.at("id").get<int>();
      const Json& sit = js.at("situation");
      s.situation.precipitation = sit.at("precipitation").get<bool>();
      s.situation.temperature =
          parse_temperature(sit.at("temperature").get<std::string>());
      for (const Json& ja : js.at("alternatives")) {
        Vector fv = vector_from_json(ja);
        validate_feature_vector(fv);
        s.alternatives.push_back(std::move(fv));
      }
      s.ranking = js.at("ranking").get<std::vector<int>>();
      std::vector<int> sorted = s.ranking;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted.size() != s.alternatives.size() ||
            sorted[i] != static_cast<int>(i)) {
          throw InputError("scenario " + std::to_string(s.id) + " of user " +
                           std::to_string(u.id) +
                           ": ranking is not a permutation of the alternatives");
        }
      }
      if (s.ranking.size() != s.alternatives.size()) {
        throw InputError("scenario " + std::to_string(s.id) + " of user " +
                         std::to_string(u.id) +
                         ": ranking length differs from alternatives");
      }
      u.scenarios.push_back(std::move(s));
    }
    data.users.push_back(std::move(u));
  }
  return data;
}

}  // namespace

ChoiceDataset dataset_from_json(const Json& j) {
  try {
    return parse_dataset(j);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed dataset JSON: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw Error("write to " + path.string() + " failed");
}

}  // namespace favour
