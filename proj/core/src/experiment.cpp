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

#include "favour/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "favour/baselines.hpp"
#include "favour/errors.hpp"
#include "favour/parallel.hpp"
#include "favour/random.hpp"

namespace favour {
namespace {

constexpr std::array<std::string_view, kNumMethods> kMethodNames = {
    "mpp", "flat", "mpp-only", "mixed-logit", "mixed-logit-mpp", "ml-prior"};

bool uses(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Everything a test user's sessions need, built from the other users only.
struct FoldModels {
  GaussianBelief mpp;
  GaussianBelief ml_prior;
  MixedLogitModel mixed_logit;
  FoldInfo info;
};

FoldModels build_fold_models(const std::vector<TrainingSet>& comparisons,
                             const std::vector<UserObservations>& observations,
                             int test_user, const std::vector<Method>& methods,
                             const CvConfig& cv, const BoxBounds& bounds) {
  std::vector<TrainingSet> train;
  std::vector<UserObservations> train_obs;
  for (std::size_t u = 0; u < comparisons.size(); ++u) {
    if (static_cast<int>(u) == test_user) continue;
    for (const auto& ex : comparisons[u]) {
      if (ex.user == test_user) {
        throw Error("leave-one-out violation: test user comparison in the "
                    "training pool");
      }
    }
    train.push_back(comparisons[u]);
    train_obs.push_back(observations[u]);
  }
  FoldModels fm;
  fm.info.user = test_user;
  if (uses(methods, Method::kMpp) || uses(methods, Method::kMppOnly) ||
      uses(methods, Method::kMixedLogitMpp)) {
    MppConfig mc = cv.mpp;
    mc.workers = 1;
    mc.map = cv.map;
    const MppResult r = mpp_refine(train, bounds, mc);
    fm.mpp = r.prior;
    fm.info.mpp_iterations = r.iterations;
    fm.info.mpp_converged = r.converged;
  }
  if (uses(methods, Method::kMlPrior)) {
    fm.ml_prior = ml_prior_benchmark(train, bounds, cv.map).prior;
  }
  if (uses(methods, Method::kMixedLogit)) {
    SmleOptions so;
    so.draws = cv.mixed_logit_draws;
    so.seed = derive_seed(cv.seed, {static_cast<std::uint64_t>(test_user), 7});
    const std::vector<bool> candidates(static_cast<std::size_t>(bounds.dim()),
                                       true);
    const AicResult sel = aic_select(train_obs, candidates, so);
    fm.info.mixed_logit_selected = sel.model.num_selected();
    fm.mixed_logit = reintroduce_excluded(sel.model);
  }
  return fm;
}

std::vector<SessionRecord> run_fold(const std::vector<TrainingSet>& comparisons,
                                    const std::vector<UserObservations>& observations,
                                    int k, const std::vector<Method>& methods,
                                    const CvConfig& cv, const BoxBounds& bounds,
                                    FoldInfo* info) {
  const FoldModels fm =
      build_fold_models(comparisons, observations, k, methods, cv, bounds);
  *info = fm.info;
  const TrainingSet& all = comparisons[static_cast<std::size_t>(k)];
  const auto uk = static_cast<std::uint64_t>(k);
  const GaussianBelief flat = GaussianBelief::standard(bounds.dim());

  std::vector<SessionRecord> out;
  for (int rep = 0; rep < cv.repartitions; ++rep) {
    const auto ur = static_cast<std::uint64_t>(rep);
    Rng split_rng(derive_seed(cv.seed, {uk, ur}));
    std::vector<int> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), split_rng);
    std::vector<Vector> test_d;
    std::vector<bool> first_preferred;
    for (int t = 0; t < cv.test_size; ++t) {
      // Present each test pair in a random orientation.
      const bool keep = std::uniform_int_distribution<int>(0, 1)(split_rng) == 1;
      const Vector& d = all[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])].d;
      test_d.push_back(keep ? d : Vector(-d));
      first_preferred.push_back(keep);
    }
    const std::vector<int> candidates(order.begin() + cv.test_size, order.end());

    for (int size : cv.training_sizes) {
      for (int sample = 0; sample < cv.samples_per_size; ++sample) {
        Rng rng(derive_seed(cv.seed, {uk, ur, static_cast<std::uint64_t>(size),
                                      static_cast<std::uint64_t>(sample)}));
        std::vector<int> pool = candidates;
        std::shuffle(pool.begin(), pool.end(), rng);
        TrainingSet train;
        for (int i = 0; i < size; ++i) {
          train.push_back(all[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])]);
        }
        const std::uint64_t session_seed =
            derive_seed(cv.seed, {uk, ur, static_cast<std::uint64_t>(size),
                                  static_cast<std::uint64_t>(sample), 1});

        for (Method m : methods) {
          SessionRecord rec;
          rec.method = m;
          rec.user = k;
          rec.repartition = rep;
          rec.size = size;
          rec.sample = sample;
          rec.train_pairs.assign(pool.begin(), pool.begin() + size);
          rec.test_pairs.assign(order.begin(), order.begin() + cv.test_size);
          try {
            std::function<double(const Vector&)> predict;
            GaussianBelief belief;
            Vector profile;
            switch (m) {
              case Method::kMpp:
                belief = map_estimate(train, fm.mpp, bounds, cv.map);
                break;
              case Method::kFlat:
                belief = map_estimate(train, flat, bounds, cv.map);
                break;
              case Method::kMppOnly:
                belief = fm.mpp;
                break;
              case Method::kMlPrior:
                belief = map_estimate(train, fm.ml_prior, bounds, cv.map);
                break;
              case Method::kMixedLogit:
                profile = individual_parameters(
                              fm.mixed_logit,
                              observations_from_comparisons(train),
                              cv.individual_draws, session_seed)
                              .profile;
                break;
              case Method::kMixedLogitMpp:
                profile = individual_parameters(
                              fm.mpp, observations_from_comparisons(train),
                              cv.individual_draws, session_seed)
                              .profile;
                break;
            }
            int correct = 0;
            for (std::size_t t = 0; t < test_d.size(); ++t) {
              const double p = profile.size() > 0
                                   ? sigmoid(profile.dot(test_d[t]))
                                   : predict_preference_d(belief, test_d[t]);
              // "first preferred" iff p > 0.5; p <= 0.5 predicts the second.
              const bool ok = (p > 0.5) == first_preferred[t];
              rec.probabilities.push_back(p);
              rec.correct.push_back(ok);
              correct += ok ? 1 : 0;
            }
            rec.accuracy = static_cast<double>(correct) / cv.test_size;
          } catch (const Error& e) {
            rec.failed = true;
            rec.error = e.what();
            rec.probabilities.clear();
            rec.correct.clear();
          }
          out.push_back(std::move(rec));
        }
      }
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0
                   : std::accumulate(v.begin(), v.end(), 0.0) /
                         static_cast<double>(v.size());
}

}  // namespace

std::string_view method_name(Method m) {
  return kMethodNames[static_cast<std::size_t>(m)];
}

Method parse_method(std::string_view name) {
  if (name == "flat-prior") return Method::kFlat;
  if (name == "ml-prior-benchmark") return Method::kMlPrior;
  for (int i = 0; i < kNumMethods; ++i) {
    if (kMethodNames[static_cast<std::size_t>(i)] == name) {
      return static_cast<Method>(i);
    }
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  if (list == "all") {
    for (int i = 0; i < kNumMethods; ++i) out.push_back(static_cast<Method>(i));
    return out;
  }
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = list.find(',', pos);
    const std::string_view item =
        list.substr(pos, comma == std::string_view::npos ? list.size() - pos
                                                         : comma - pos);
    if (!item.empty()) {
      const Method m = parse_method(item);
      if (!uses(out, m)) out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("no methods selected");
  std::sort(out.begin(), out.end());
  return out;
}

void CvConfig::validate(int comparisons_per_user) const {
  if (training_sizes.empty()) throw ConfigError("no training sizes configured");
  if (repartitions < 1) throw ConfigError("repartitions must be >= 1");
  if (test_size < 1) throw ConfigError("test_size must be >= 1");
  if (samples_per_size < 1) throw ConfigError("samples_per_size must be >= 1");
  for (int s : training_sizes) {
    if (s < 0) throw ConfigError("training sizes must be non-negative");
  }
  const int max_size =
      *std::max_element(training_sizes.begin(), training_sizes.end());
  if (max_size + test_size > comparisons_per_user) {
    std::ostringstream msg;
    msg << "max training size " << max_size << " + test size " << test_size
        << " exceeds the " << comparisons_per_user << " comparisons per user";
    throw ConfigError(msg.str());
  }
  if (mixed_logit_draws < 1 || individual_draws < 1) {
    throw ConfigError("draw counts must be >= 1");
  }
}

Json cv_config_to_json(const CvConfig& cv) {
  return {
      {"training_sizes", cv.training_sizes},
      {"repartitions", cv.repartitions},
      {"test_size", cv.test_size},
      {"samples_per_size", cv.samples_per_size},
      {"seed", cv.seed},
      {"kl_threshold", cv.mpp.kl_threshold},
      {"max_iterations", cv.mpp.max_iterations},
      {"map_runs", cv.map.runs},
      {"map_seed", cv.map.seed},
      {"map_max_iterations", cv.map.max_iterations},
      {"mixed_logit_draws", cv.mixed_logit_draws},
      {"individual_draws", cv.individual_draws},
  };
}

CvConfig cv_config_from_json(const Json& j) {
  CvConfig cv;
  if (!j.is_object()) throw InputError("cv config must be a JSON object");
  try {
  cv.training_sizes = j.value("training_sizes", cv.training_sizes);
  cv.repartitions = j.value("repartitions", cv.repartitions);
  cv.test_size = j.value("test_size", cv.test_size);
  cv.samples_per_size = j.value("samples_per_size", cv.samples_per_size);
  cv.seed = j.value("seed", cv.seed);
  cv.mpp.kl_threshold = j.value("kl_threshold", cv.mpp.kl_threshold);
  cv.mpp.max_iterations = j.value("max_iterations", cv.mpp.max_iterations);
  cv.map.runs = j.value("map_runs", cv.map.runs);
  cv.map.seed = j.value("map_seed", cv.map.seed);
  cv.map.max_iterations = j.value("map_max_iterations", cv.map.max_iterations);
  cv.mixed_logit_draws = j.value("mixed_logit_draws", cv.mixed_logit_draws);
  cv.individual_draws = j.value("individual_draws", cv.individual_draws);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed cv config: ") + e.what());
  }
  return cv;
}

CvResult louo_cv(const ChoiceDataset& data, const std::vector<Method>& methods,
                 const CvConfig& cv) {
  if (data.users.size() < 2) {
    throw ConfigError("leave-one-user-out needs at least two users");
  }
  if (methods.empty()) throw ConfigError("no methods selected");
  std::vector<TrainingSet> comparisons;
  std::vector<UserObservations> observations;
  int per_user = std::numeric_limits<int>::max();
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    // Tag provenance with the position so leave-one-out checks are exact.
    UserData user = data.users[u];
    user.id = static_cast<int>(u);
    comparisons.push_back(user_comparisons(user));
    observations.push_back(observations_from_user(user));
    per_user = std::min(per_user, static_cast<int>(comparisons.back().size()));
  }
  cv.validate(per_user);
  const BoxBounds bounds = BoxBounds::route_default();

  CvResult result;
  result.methods = methods;
  result.sizes = cv.training_sizes;
  const std::size_t n_users = data.users.size();
  std::vector<std::vector<SessionRecord>> per_fold(n_users);
  result.folds.resize(n_users);
  parallel_for(n_users, cv.workers, [&](std::size_t k) {
    per_fold[k] = run_fold(comparisons, observations, static_cast<int>(k),
                           methods, cv, bounds, &result.folds[k]);
  });
  for (auto& fold : per_fold) {
    for (auto& rec : fold) {
      if (rec.failed) ++result.failures;
      result.sessions.push_back(std::move(rec));
    }
  }
  result.cells = aggregate_sessions(result.sessions, methods, cv.training_sizes);
  return result;
}

std::optional<double> predictive_confidence(
    const std::vector<const SessionRecord*>& sessions) {
  std::vector<double> conf;
  for (const SessionRecord* s : sessions) {
    if (s->failed) continue;
    for (std::size_t t = 0; t < s->probabilities.size(); ++t) {
      if (!s->correct[t]) continue;
      const double p = s->probabilities[t];
      conf.push_back(p > 0.5 ? p : 1.0 - p);
    }
  }
  if (conf.empty()) return std::nullopt;
  // Summed in sorted order so the result does not depend on session order.
  std::sort(conf.begin(), conf.end());
  double sum = 0.0;
  for (double c : conf) sum += c;
  return sum / static_cast<double>(conf.size());
}

std::vector<CurveCell> aggregate_sessions(
    const std::vector<SessionRecord>& sessions,
    const std::vector<Method>& methods, const std::vector<int>& sizes) {
  std::vector<CurveCell> cells;
  for (Method m : methods) {
    for (int size : sizes) {
      std::vector<const SessionRecord*> members;
      std::vector<double> acc;
      for (const auto& s : sessions) {
        if (s.method == m && s.size == size && !s.failed) {
          members.push_back(&s);
          acc.push_back(s.accuracy);
        }
      }
      std::sort(acc.begin(), acc.end());
      CurveCell cell;
      cell.method = m;
      cell.size = size;
      cell.n_sessions = static_cast<int>(acc.size());
      cell.mean_accuracy = mean_of(acc);
      if (acc.size() > 1) {
        double ss = 0.0;
        for (double a : acc) ss += (a - cell.mean_accuracy) * (a - cell.mean_accuracy);
        cell.std_accuracy = std::sqrt(ss / static_cast<double>(acc.size() - 1));
      }
      cell.confidence = predictive_confidence(members);
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<double> session_accuracies(const CvResult& result, Method method,
                                       int size) {
  std::vector<double> acc;
  for (const auto& s : result.sessions) {
    if (s.method == method && s.size == size && !s.failed) {
      acc.push_back(s.accuracy);
    }
  }
  return acc;
}

KsResult ks_test_one_sided(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw ConfigError("ks_test_one_sided needs two non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto n = static_cast<double>(a.size());
  const auto m = static_cast<double>(b.size());
  std::vector<double> grid;
  grid.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(grid));
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double d = 0.0;
  for (double x : grid) {
    const double fa =
        static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / n;
    const double fb =
        static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / m;
    d = std::max(d, fb - fa);
  }
  KsResult r;
  r.statistic = d;
  r.p_value = d <= 0.0 ? 1.0 : std::min(1.0, std::exp(-2.0 * n * m / (n + m) * d * d));
  return r;
}

std::vector<KsReport> ks_reports(const CvResult& result, Method better,
                                 Method worse) {
  std::vector<KsReport> out;
  const double alpha = 0.05 / static_cast<double>(result.sizes.size());
  for (int size : result.sizes) {
    const auto a = session_accuracies(result, better, size);
    const auto b = session_accuracies(result, worse, size);
    if (a.empty() || b.empty()) continue;
    KsReport rep;
    rep.size = size;
    rep.result = ks_test_one_sided(a, b);
    rep.alpha = alpha;
    rep.reject = rep.result.p_value < alpha;
    out.push_back(rep);
  }
  return out;
}

std::string curves_to_csv(const std::vector<CurveCell>& cells) {
  std::ostringstream out;
  out << "method,size,mean_acc,std_acc,n,confidence\n";
  for (const auto& c : cells) {
    out << method_name(c.method) << ',' << c.size << ','
        << format_double(c.mean_accuracy) << ',' << format_double(c.std_accuracy)
        << ',' << c.n_sessions << ','
        << (c.confidence ? format_double(*c.confidence) : std::string()) << '\n';
  }
  return out.str();
}

std::vector<CurveCell> curves_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) ||
      line != "method,size,mean_acc,std_acc,n,confidence") {
    throw InputError("learning-curve CSV has an unexpected header");
  }
  std::vector<CurveCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const std::size_t comma = line.find(',', pos);
      f.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 6) throw InputError("malformed CSV row: " + line);
    CurveCell c;
    c.method = parse_method(f[0]);
    c.size = std::stoi(f[1]);
    c.mean_accuracy = std::strtod(f[2].c_str(), nullptr);
    c.std_accuracy = std::strtod(f[3].c_str(), nullptr);
    c.n_sessions = std::stoi(f[4]);
    if (!f[5].empty()) c.confidence = std::strtod(f[5].c_str(), nullptr);
    cells.push_back(c);
  }
  return cells;
}

void export_results(const CvResult& result, const CvConfig& cv,
                    const ChoiceDataset& data,
                    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error("cannot create output directory " + dir.string() + ": " +
                ec.message());
  }
  auto write_text = [](const std::filesystem::path& path,
                       const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("write to " + path.string() + " failed");
  };
  write_text(dir / "learning_curves.csv", curves_to_csv(result.cells));

  Json ks = Json::array();
  std::ostringstream ks_csv;
  ks_csv << "better,worse,size,statistic,p_value,alpha,reject\n";
  const bool have_pair = uses(result.methods, Method::kMpp) &&
                         uses(result.methods, Method::kFlat);
  if (have_pair) {
    for (const auto& r : ks_reports(result, Method::kMpp, Method::kFlat)) {
      ks_csv << "mpp,flat," << r.size << ',' << format_double(r.result.statistic)
             << ',' << format_double(r.result.p_value) << ','
             << format_double(r.alpha) << ',' << (r.reject ? 1 : 0) << '\n';
      ks.push_back({{"better", "mpp"},
                    {"worse", "flat"},
                    {"size", r.size},
                    {"statistic", r.result.statistic},
                    {"p_value", r.result.p_value},
                    {"alpha", r.alpha},
                    {"reject", r.reject}});
    }
  }
  write_text(dir / "ks_tests.csv", ks_csv.str());

  Json failures = Json::array();
  for (const auto& s : result.sessions) {
    if (!s.failed) continue;
    failures.push_back({{"method", method_name(s.method)},
                        {"user", s.user},
                        {"repartition", s.repartition},
                        {"size", s.size},
                        {"sample", s.sample},
                        {"error", s.error}});
  }
  Json folds = Json::array();
  for (const auto& f : result.folds) {
    folds.push_back({{"user", f.user},
                     {"mpp_iterations", f.mpp_iterations},
                     {"mpp_converged", f.mpp_converged},
                     {"mixed_logit_selected", f.mixed_logit_selected}});
  }
  Json methods = Json::array();
  for (Method m : result.methods) methods.push_back(method_name(m));
  const Json manifest = {
      {"tool", "favour"},
      {"version", "1.0.0"},
      {"seed", cv.seed},
      {"cv", cv_config_to_json(cv)},
      {"methods", methods},
      {"dataset",
       {{"n_users", data.users.size()},
        {"spec_hash", data.spec_hash},
        {"spec_seed", data.spec.seed}}},
      {"folds", folds},
      {"ks_tests", ks},
      {"failure_count", result.failures},
      {"failures", failures},
  };
  write_json_file(dir / "manifest.json", manifest);
}

}  // namespace favour
