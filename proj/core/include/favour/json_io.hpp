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

#ifndef FAVOUR_JSON_IO_HPP_
#define FAVOUR_JSON_IO_HPP_

// JSON (de)serialisation of beliefs, feature vectors, population specs and
// datasets. Doubles are written in shortest round-trip form, so a value read
// back is bit-identical to the value written.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "favour/bayes.hpp"
#include "favour/synthetic.hpp"

namespace favour {

using Json = nlohmann::json;

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

// {"mean": [...], "cov": [[...], ...]}
Json belief_to_json(const GaussianBelief& b);
GaussianBelief belief_from_json(const Json& j);

// Missing fields take the PopulationSpec::defaults() values.
Json spec_to_json(const PopulationSpec& spec);
PopulationSpec spec_from_json(const Json& j);
// FNV-1a of the canonical spec JSON, as 16 hex digits.
std::string spec_hash(const PopulationSpec& spec);

Json dataset_to_json(const ChoiceDataset& data);
ChoiceDataset dataset_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace favour

#endif  // FAVOUR_JSON_IO_HPP_
