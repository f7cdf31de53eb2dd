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

#include <benchmark/benchmark.h>

#include <vector>

#include "favour/baselines.hpp"
#include "favour/bayes.hpp"
#include "favour/mass_prior.hpp"
#include "favour/synthetic.hpp"

namespace favour {
namespace {

const ChoiceDataset& dataset() {
  static const ChoiceDataset data = [] {
    PopulationSpec spec = PopulationSpec::defaults();
    spec.n_users = 8;
    return sample_population(spec);
  }();
  return data;
}

GaussianBelief standard_prior(Eigen::Index dim) {
  return {Vector::Zero(dim), Matrix::Identity(dim, dim)};
}

void BM_MapEstimate(benchmark::State& state) {
  TrainingSet all = user_comparisons(dataset().users[0]);
  all.resize(static_cast<std::size_t>(state.range(0)));
  const GaussianBelief prior = standard_prior(kFeatureDim);
  const BoxBounds bounds = BoxBounds::route_default();
  for (auto _ : state) {
    benchmark::DoNotOptimize(map_estimate(all, prior, bounds));
  }
}
BENCHMARK(BM_MapEstimate)->Arg(2)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const TrainingSet all = user_comparisons(dataset().users[0]);
  const GaussianBelief post =
      map_estimate(all, standard_prior(kFeatureDim), BoxBounds::route_default());
  const Vector& d = all.front().d;
  for (auto _ : state) benchmark::DoNotOptimize(predict_preference_d(post, d));
}
BENCHMARK(BM_Predict);

void BM_MppAverage(benchmark::State& state) {
  std::vector<GaussianBelief> posteriors;
  for (const auto& u : dataset().users) {
    posteriors.push_back(map_estimate(user_comparisons(u), standard_prior(kFeatureDim),
                                      BoxBounds::route_default()));
  }
  for (auto _ : state) benchmark::DoNotOptimize(mpp_average(posteriors));
}
BENCHMARK(BM_MppAverage);

void BM_SimulatedLogLikelihood(benchmark::State& state) {
  std::vector<UserObservations> obs;
  for (const auto& u : dataset().users) obs.push_back(observations_from_user(u));
  const MixedLogitModel model = MixedLogitModel::all_selected(kFeatureDim, 0.1);
  const SimulationDraws draws = make_draws(obs.size(), kFeatureDim,
                                           static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulated_log_likelihood(obs, model, draws));
  }
}
BENCHMARK(BM_SimulatedLogLikelihood)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace favour

BENCHMARK_MAIN();
