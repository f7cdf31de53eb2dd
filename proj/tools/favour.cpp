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

// favour: command-line front end for simulation, prior construction,
// per-user fitting and the leave-one-user-out evaluation.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "favour/baselines.hpp"
#include "favour/bayes.hpp"
#include "favour/errors.hpp"
#include "favour/experiment.hpp"
#include "favour/json_io.hpp"
#include "favour/mass_prior.hpp"
#include "favour/synthetic.hpp"

namespace {

using favour::Json;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

std::vector<favour::TrainingSet> dataset_comparisons(
    const favour::ChoiceDataset& data) {
  std::vector<favour::TrainingSet> out;
  out.reserve(data.users.size());
  for (const auto& u : data.users) out.push_back(favour::user_comparisons(u));
  return out;
}

void emit(const std::string& out, const Json& j) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(1) << '\n';
  } else {
    favour::write_json_file(out, j);
  }
}

int run_simulate(const std::string& spec_path, const std::string& out,
                 std::optional<std::uint64_t> seed) {
  favour::PopulationSpec spec =
      spec_path.empty() ? favour::PopulationSpec::defaults()
                        : favour::spec_from_json(favour::read_json_file(spec_path));
  if (seed) spec.seed = *seed;
  const favour::ChoiceDataset data = favour::sample_population(spec);
  emit(out, favour::dataset_to_json(data));
  return kExitOk;
}

int run_mpp(const std::string& data_path, const std::string& out,
            double kl_threshold, int max_iter, std::uint64_t seed,
            int workers) {
  const auto data = favour::dataset_from_json(favour::read_json_file(data_path));
  favour::MppConfig config;
  config.kl_threshold = kl_threshold;
  config.max_iterations = max_iter;
  config.map.seed = seed;
  config.workers = workers;
  const auto sets = dataset_comparisons(data);
  const favour::MppResult r =
      favour::mpp_refine(sets, favour::BoxBounds::route_default(), config);
  Json j = favour::belief_to_json(r.prior);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["kl_trace"] = r.kl_trace;
  j["kl_threshold"] = kl_threshold;
  j["seed"] = seed;
  emit(out, j);
  if (!r.converged) {
    std::cerr << "favour mpp: KL threshold not reached after " << r.iterations
              << " iterations\n";
  }
  return kExitOk;
}

int run_ml_prior(const std::string& data_path, const std::string& out,
                 std::uint64_t seed) {
  const auto data = favour::dataset_from_json(favour::read_json_file(data_path));
  favour::MapOptions map;
  map.seed = seed;
  const auto sets = dataset_comparisons(data);
  const favour::MlPriorResult r = favour::ml_prior_benchmark(
      sets, favour::BoxBounds::route_default(), map);
  Json j = favour::belief_to_json(r.prior);
  std::vector<int> flat;
  for (std::size_t i = 0; i < r.uninformative.size(); ++i) {
    if (r.uninformative[i]) flat.push_back(static_cast<int>(i));
  }
  j["uninformative"] = flat;
  j["seed"] = seed;
  emit(out, j);
  return kExitOk;
}

int run_fit_mixed_logit(const std::string& data_path, const std::string& out,
                        int draws, std::uint64_t seed, bool select) {
  const auto data = favour::dataset_from_json(favour::read_json_file(data_path));
  std::vector<favour::UserObservations> obs;
  for (const auto& u : data.users) obs.push_back(favour::observations_from_user(u));
  favour::SmleOptions options;
  options.draws = draws;
  options.seed = seed;
  Json j;
  favour::MixedLogitModel model;
  if (select) {
    const std::vector<bool> candidates(favour::kFeatureDim, true);
    const favour::AicResult r = favour::aic_select(obs, candidates, options);
    model = r.model;
    j["aic"] = r.aic;
    j["empty_aic"] = r.empty_aic;
  } else {
    model = favour::smle_fit(
        obs, favour::MixedLogitModel::all_selected(favour::kFeatureDim, 0.1),
        options);
    j["aic"] = favour::aic(model.log_likelihood, model.num_parameters());
  }
  j["mu"] = favour::vector_to_json(model.mu);
  j["sigma"] = favour::vector_to_json(model.sigma);
  j["selected"] = model.selected;
  j["log_likelihood"] = model.log_likelihood;
  j["converged"] = model.converged;
  j["flagged"] = model.flagged;
  j["note"] = model.note;
  j["draws"] = draws;
  j["seed"] = seed;
  emit(out, j);
  return model.converged ? kExitOk : kExitPartial;
}

int run_fit(const std::string& prior_path, const std::string& data_path,
            int user, int size, const std::string& out, std::uint64_t seed) {
  const auto data = favour::dataset_from_json(favour::read_json_file(data_path));
  if (user < 0 || user >= static_cast<int>(data.users.size())) {
    throw favour::ConfigError("user index " + std::to_string(user) +
                              " out of range");
  }
  favour::TrainingSet t =
      favour::user_comparisons(data.users[static_cast<std::size_t>(user)]);
  if (size >= 0 && size < static_cast<int>(t.size())) {
    t.resize(static_cast<std::size_t>(size));
  }
  const favour::GaussianBelief prior =
      prior_path.empty()
          ? favour::GaussianBelief::standard(favour::kFeatureDim)
          : favour::belief_from_json(favour::read_json_file(prior_path));
  favour::MapOptions map;
  map.seed = seed;
  favour::MapDiagnostics diag;
  const auto post = favour::map_estimate(
      t, prior, favour::BoxBounds::route_default(), map, &diag);
  Json j = favour::belief_to_json(post);
  j["log_posterior"] = diag.log_posterior;
  j["converged_runs"] = diag.converged_runs;
  j["n_comparisons"] = t.size();
  emit(out, j);
  return kExitOk;
}

int run_predict(const std::string& belief_path, const std::string& pair_path) {
  const auto belief = favour::belief_from_json(favour::read_json_file(belief_path));
  const Json pair = favour::read_json_file(pair_path);
  double p = 0.0;
  if (pair.contains("d")) {
    p = favour::predict_preference_d(belief, favour::vector_from_json(pair["d"]));
  } else if (pair.contains("r") && pair.contains("q")) {
    p = favour::predict_preference(belief, favour::vector_from_json(pair["r"]),
                                   favour::vector_from_json(pair["q"]));
  } else {
    throw favour::InputError(pair_path + ": pair needs \"r\" and \"q\" or \"d\"");
  }
  const Json j = {{"probability", p}, {"prefers", p > 0.5 ? "r" : "q"}};
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int run_eval(const std::string& data_path, const std::string& methods,
             const std::string& cv_path, const std::string& out,
             std::optional<std::uint64_t> seed, int workers) {
  const auto data = favour::dataset_from_json(favour::read_json_file(data_path));
  favour::CvConfig cv = cv_path.empty()
                            ? favour::CvConfig{}
                            : favour::cv_config_from_json(
                                  favour::read_json_file(cv_path));
  if (seed) {
    cv.seed = *seed;
    cv.map.seed = *seed;
  }
  cv.workers = workers;
  const auto list = favour::parse_methods(methods);
  const favour::CvResult result = favour::louo_cv(data, list, cv);
  favour::export_results(result, cv, data, out);
  if (result.failures > 0) {
    std::cerr << "favour eval: " << result.failures
              << " session(s) failed; see manifest.json\n";
    return kExitPartial;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FAVOUR pairwise route-preference engine"};
  app.require_subcommand(1);

  std::string spec_path, data_path, out, methods = "all", cv_path, belief_path,
                                         pair_path, prior_path;
  std::uint64_t seed = 1;
  int workers = 1, max_iter = 50, draws = 2000, user = 0, size = -1;
  double kl_threshold = 1e-3;
  bool no_select = false;

  auto* sim = app.add_subcommand("simulate", "Sample a synthetic dataset");
  sim->add_option("--spec", spec_path, "Population spec JSON (defaults if omitted)");
  sim->add_option("--out", out, "Output dataset JSON")->required();
  auto* sim_seed = sim->add_option("--seed", seed, "Overrides the spec seed");

  auto* mpp = app.add_subcommand("mpp", "Build the mass-preference prior");
  mpp->add_option("--data", data_path)->required();
  mpp->add_option("--out", out)->required();
  mpp->add_option("--kl-threshold", kl_threshold)->check(CLI::PositiveNumber);
  mpp->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
  mpp->add_option("--seed", seed);
  mpp->add_option("--workers", workers)->check(CLI::PositiveNumber);

  auto* ml = app.add_subcommand("baseline-ml-prior",
                                "Build the pooled maximum-likelihood prior");
  ml->add_option("--data", data_path)->required();
  ml->add_option("--out", out)->required();
  ml->add_option("--seed", seed);

  auto* mxl = app.add_subcommand("fit-mixed-logit",
                                 "Fit the mixed logit with AIC selection");
  mxl->add_option("--data", data_path)->required();
  mxl->add_option("--out", out)->required();
  mxl->add_option("--draws", draws)->check(CLI::PositiveNumber);
  mxl->add_option("--seed", seed);
  mxl->add_flag("--no-select", no_select, "Fit all features, skip AIC search");

  auto* fit = app.add_subcommand("fit", "Posterior for one user of a dataset");
  fit->add_option("--prior", prior_path, "Prior belief JSON (N(0,I) if omitted)");
  fit->add_option("--data", data_path)->required();
  fit->add_option("--user", user);
  fit->add_option("--size", size, "Use only the first n comparisons");
  fit->add_option("--out", out)->required();
  fit->add_option("--seed", seed);

  auto* pred = app.add_subcommand("predict", "Preference probability for a pair");
  pred->add_option("--belief", belief_path)->required();
  pred->add_option("--pair", pair_path)->required();

  auto* ev = app.add_subcommand("eval", "Leave-one-user-out evaluation");
  ev->add_option("--data", data_path)->required();
  ev->add_option("--methods", methods, "Comma list or 'all'");
  ev->add_option("--cv", cv_path, "CV config JSON");
  ev->add_option("--out", out)->required();
  auto* ev_seed = ev->add_option("--seed", seed);
  ev->add_option("--workers", workers)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (*sim) {
      return run_simulate(spec_path, out,
                          sim_seed->count() ? std::optional(seed) : std::nullopt);
    }
    if (*mpp) return run_mpp(data_path, out, kl_threshold, max_iter, seed, workers);
    if (*ml) return run_ml_prior(data_path, out, seed);
    if (*mxl) return run_fit_mixed_logit(data_path, out, draws, seed, !no_select);
    if (*fit) return run_fit(prior_path, data_path, user, size, out, seed);
    if (*pred) return run_predict(belief_path, pair_path);
    if (*ev) {
      return run_eval(data_path, methods, cv_path, out,
                      ev_seed->count() ? std::optional(seed) : std::nullopt,
                      workers);
    }
  } catch (const std::exception& e) {
    std::cerr << "favour: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
