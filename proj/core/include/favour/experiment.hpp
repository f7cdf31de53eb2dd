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

#ifndef FAVOUR_EXPERIMENT_HPP_
#define FAVOUR_EXPERIMENT_HPP_

// Leave-one-user-out cross-validation of the preference learners, learning
// curve aggregation, one-sided Kolmogorov-Smirnov tests and result export.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "favour/bayes.hpp"
#include "favour/json_io.hpp"
#include "favour/mass_prior.hpp"
#include "favour/synthetic.hpp"

namespace favour {

enum class Method {
  kMpp = 0,       // Bayesian updating from the mass-preference prior
  kFlat,          // Bayesian updating from N(0, I)
  kMppOnly,       // the mass-preference prior, no personalisation
  kMixedLogit,    // mixed logit + AIC, individual-level parameters
  kMixedLogitMpp, // individual-level parameters drawn from the MPP
  kMlPrior,       // Bayesian updating from a pooled ML prior
};

inline constexpr int kNumMethods = 6;

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
// Comma-separated list; "all" selects every method.
std::vector<Method> parse_methods(std::string_view list);

struct CvConfig {
  std::vector<int> training_sizes = {2, 4, 6, 8, 10, 12, 15};
  int repartitions = 5;
  int test_size = 5;
  int samples_per_size = 1;
  std::uint64_t seed = 1;
  int workers = 1;
  MppConfig mpp;
  MapOptions map;
  // Draws for the population mixed-logit estimation and for the
  // individual-level parameters.
  int mixed_logit_draws = 200;
  int individual_draws = 2000;

  void validate(int comparisons_per_user) const;
};

Json cv_config_to_json(const CvConfig& cv);
// Missing fields keep their defaults.
CvConfig cv_config_from_json(const Json& j);

struct SessionRecord {
  Method method = Method::kMpp;
  int user = 0;
  int repartition = 0;
  int size = 0;
  int sample = 0;
  double accuracy = 0.0;
  // Per test pair: probability that the first presented route is preferred,
  // and whether the prediction was right.
  std::vector<double> probabilities;
  std::vector<bool> correct;
  // Indices into the test user's comparison list.
  std::vector<int> train_pairs;
  std::vector<int> test_pairs;
  bool failed = false;
  std::string error;
};

struct CurveCell {
  Method method = Method::kMpp;
  int size = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  int n_sessions = 0;
  // Mean predicted probability of the correct outcome over correct
  // predictions; empty when a cell has no correct prediction.
  std::optional<double> confidence;
};

struct FoldInfo {
  int user = 0;
  int mpp_iterations = 0;
  bool mpp_converged = false;
  int mixed_logit_selected = 0;
};

struct CvResult {
  std::vector<Method> methods;
  std::vector<int> sizes;
  std::vector<SessionRecord> sessions;  // deterministic order
  std::vector<CurveCell> cells;         // method-major, then size
  std::vector<FoldInfo> folds;
  int failures = 0;
};

CvResult louo_cv(const ChoiceDataset& data, const std::vector<Method>& methods,
                 const CvConfig& cv);

// Mean predicted probability of the realised outcome over the correctly
// predicted test pairs of the given sessions.
std::optional<double> predictive_confidence(
    const std::vector<const SessionRecord*>& sessions);

std::vector<CurveCell> aggregate_sessions(
    const std::vector<SessionRecord>& sessions,
    const std::vector<Method>& methods, const std::vector<int>& sizes);

// Accuracies of all successful sessions of (method, size).
std::vector<double> session_accuracies(const CvResult& result, Method method,
                                       int size);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sided two-sample Kolmogorov-Smirnov test of H1: `a` is stochastically
// larger than `b`. Statistic sup_x (F_b(x) - F_a(x)), asymptotic p-value
// exp(-2 n m / (n + m) D^2).
KsResult ks_test_one_sided(std::vector<double> a, std::vector<double> b);

struct KsReport {
  int size = 0;
  KsResult result;
  double alpha = 0.0;  // Bonferroni-corrected
  bool reject = false;
};

// mpp vs flat at every size, alpha = 0.05 / #sizes.
std::vector<KsReport> ks_reports(const CvResult& result, Method better,
                                 Method worse);

// CSV: method,size,mean_acc,std_acc,n,confidence
std::string curves_to_csv(const std::vector<CurveCell>& cells);
std::vector<CurveCell> curves_from_csv(const std::string& csv);

// Writes learning_curves.csv, ks_tests.csv and manifest.json into `dir`.
void export_results(const CvResult& result, const CvConfig& cv,
                    const ChoiceDataset& data,
                    const std::filesystem::path& dir);

}  // namespace favour

#endif  // FAVOUR_EXPERIMENT_HPP_
