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

#include "favour/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "favour/errors.hpp"
#include "favour/random.hpp"

namespace favour {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// --- Stacked per-user choice data --------------------------------------------

struct UserBlock {
  Matrix rows;  // all alternatives of all observations, stacked
  std::vector<int> start;
  std::vector<int> length;
  std::vector<int> chosen_row;
};

UserBlock stack_user(const UserObservations& obs, Eigen::Index dim) {
  UserBlock b;
  int total = 0;
  for (const auto& o : obs) {
    if (o.alternatives.cols() != dim) {
      throw ConfigError("choice observation has wrong feature dimension");
    }
    if (o.alternatives.rows() < 2 || o.chosen < 0 ||
        o.chosen >= o.alternatives.rows()) {
      throw InputError("choice observation needs >= 2 alternatives and a "
                       "valid chosen index");
    }
    total += static_cast<int>(o.alternatives.rows());
  }
  b.rows.resize(total, dim);
  int r = 0;
  for (const auto& o : obs) {
    const auto n = static_cast<int>(o.alternatives.rows());
    b.rows.middleRows(r, n) = o.alternatives;
    b.start.push_back(r);
    b.length.push_back(n);
    b.chosen_row.push_back(r + o.chosen);
    r += n;
  }
  return b;
}

std::vector<UserBlock> stack_all(std::span<const UserObservations> data,
                                 Eigen::Index dim) {
  std::vector<UserBlock> blocks;
  blocks.reserve(data.size());
  for (const auto& u : data) blocks.push_back(stack_user(u, dim));
  return blocks;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

Matrix select_cols(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  }
  return out;
}

// Simulated log-likelihood and gradient given utilities U (rows x B) for one
// user. Fills `g` with d logL_u / dU (rows x B) when requested.
double user_sim_ll(const UserBlock& b, const Matrix& utility, Matrix* g) {
  using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
  const Eigen::Index num_draws = utility.cols();
  RowArray log_lik = RowArray::Zero(num_draws);
  if (g != nullptr) g->resize(utility.rows(), num_draws);
  for (std::size_t k = 0; k < b.start.size(); ++k) {
    const auto seg = utility.middleRows(b.start[k], b.length[k]).array();
    const RowArray m = seg.colwise().maxCoeff();
    const Eigen::ArrayXXd e = (seg.rowwise() - m).exp();
    const RowArray total = e.colwise().sum();
    log_lik += utility.row(b.chosen_row[k]).array() - m - total.log();
    if (g != nullptr) {
      g->middleRows(b.start[k], b.length[k]) =
          -(e.rowwise() / total).matrix();
    }
  }
  const double top = log_lik.maxCoeff();
  const double lse_b = top + std::log((log_lik - top).exp().sum());
  if (g != nullptr) {
    const RowArray omega = (log_lik - lse_b).exp();
    g->array().rowwise() *= omega;
    for (int row : b.chosen_row) g->row(row).array() += omega;
  }
  return lse_b - std::log(static_cast<double>(num_draws));
}

// Parameters mu_S and s_S on coordinate set S; utilities are offset by
// `offsets[u]` when given. Gradient layout: [d/dmu_S; d/ds_S] (or only mu).
double sim_ll(const std::vector<UserBlock>& blocks, const SimulationDraws& sd,
              const std::vector<int>& coords, const Vector& mu,
              const Vector& s, bool sigma_free,
              const std::vector<Matrix>* offsets, Vector* grad) {
  const auto k = static_cast<Eigen::Index>(coords.size());
  double total = 0.0;
  if (grad != nullptr) grad->setZero(sigma_free ? 2 * k : k);
  Matrix g;
  for (std::size_t u = 0; u < blocks.size(); ++u) {
    const UserBlock& b = blocks[u];
    if (b.start.empty()) continue;
    const Matrix xi = select_rows(sd.draws[u], coords);
    Matrix w = xi;
    for (Eigen::Index j = 0; j < k; ++j) {
      w.row(j) = (s[j] * xi.row(j)).array() + mu[j];
    }
    const Matrix a = select_cols(b.rows, coords);
    Matrix utility = offsets != nullptr
                         ? (*offsets)[u]
                         : Matrix::Zero(b.rows.rows(), xi.cols());
    if (k > 0) utility.noalias() += a * w;
    total += user_sim_ll(b, utility, grad != nullptr && k > 0 ? &g : nullptr);
    if (grad != nullptr && k > 0) {
      const Matrix m = a.transpose() * g;  // k x B
      grad->head(k) += m.rowwise().sum();
      if (sigma_free) grad->tail(k) += m.cwiseProduct(xi).rowwise().sum();
    }
  }
  return total;
}

// --- BFGS ---------------------------------------------------------------------

struct BfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // f after each accepted step
};

using Objective = std::function<double(const Vector&, Vector*)>;

// Stops when |grad|_inf < tol * max(1, |f|); the simulated likelihood sums
// thousands of terms, so an absolute gradient tolerance sits below roundoff.
BfgsResult minimize_bfgs(const Objective& fn, Vector x, int max_iterations,
                         double tol) {
  const Eigen::Index n = x.size();
  BfgsResult r;
  Vector g(n);
  double f = fn(x, &g);
  r.trace.push_back(f);
  auto small = [&] { return g.lpNorm<Eigen::Infinity>() < tol * std::max(1.0, std::abs(f)); };
  Matrix h_inv = Matrix::Identity(n, n);
  bool scaled = false;
  int it = 0;
  for (; it < max_iterations; ++it) {
    if (n == 0 || small()) {
      r.converged = true;
      break;
    }
    Vector p = -h_inv * g;
    double slope = g.dot(p);
    if (slope >= 0.0) {
      h_inv.setIdentity();
      scaled = false;
      p = -g;
      slope = g.dot(p);
    }
    double alpha = scaled ? 1.0 : std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());
    bool accepted = false;
    Vector x_new(n), g_new(n);
    double f_new = f;
    for (int bt = 0; bt < 30; ++bt) {
      x_new = x + alpha * p;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) &&
          (f_new <= f + 1e-4 * alpha * slope ||
           (f_new <= f && g_new.lpNorm<Eigen::Infinity>() <
                              g.lpNorm<Eigen::Infinity>()))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    const Vector step = x_new - x;
    const Vector y = g_new - g;
    const double sy = step.dot(y);
    if (sy > 1e-12 * step.norm() * y.norm()) {
      if (!scaled) {
        h_inv = Matrix::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix i_n = Matrix::Identity(n, n);
      h_inv = (i_n - rho * step * y.transpose()) * h_inv *
                  (i_n - rho * y * step.transpose()) +
              rho * step * step.transpose();
    }
    x = x_new;
    f = f_new;
    g = g_new;
    r.trace.push_back(f);
  }
  r.iterations = it;
  if (!r.converged) r.converged = small();
  r.x = std::move(x);
  r.f = f;
  r.grad = std::move(g);
  return r;
}

std::vector<int> selected_indices(const std::vector<bool>& mask) {
  std::vector<int> idx;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) idx.push_back(static_cast<int>(j));
  }
  return idx;
}

// Full joint fit of the selected coordinates, warm-started from `model`.
MixedLogitModel fit_selected(const std::vector<UserBlock>& blocks,
                             const SimulationDraws& sd,
                             const MixedLogitModel& model,
                             const SmleOptions& opt) {
  const std::vector<int> coords = selected_indices(model.selected);
  const auto k = static_cast<Eigen::Index>(coords.size());
  const bool sigma_free = !opt.fix_sigma_zero;
  Vector theta(sigma_free ? 2 * k : k);
  for (Eigen::Index j = 0; j < k; ++j) {
    theta[j] = model.mu[coords[static_cast<std::size_t>(j)]];
    if (sigma_free) theta[k + j] = model.sigma[coords[static_cast<std::size_t>(j)]];
  }
  const Objective obj = [&](const Vector& th, Vector* grad) {
    const Vector mu = th.head(k);
    const Vector s = sigma_free ? Vector(th.tail(k)) : Vector::Zero(k);
    const double ll = sim_ll(blocks, sd, coords, mu, s, sigma_free, nullptr, grad);
    if (grad != nullptr) *grad = -*grad;
    return -ll;
  };
  const BfgsResult res =
      minimize_bfgs(obj, theta, opt.max_iterations, opt.gradient_tolerance);
  MixedLogitModel out = model;
  out.mu.setZero();
  out.sigma.setZero();
  for (Eigen::Index j = 0; j < k; ++j) {
    const int c = coords[static_cast<std::size_t>(j)];
    out.mu[c] = res.x[j];
    out.sigma[c] = sigma_free ? std::abs(res.x[k + j]) : 0.0;
  }
  out.log_likelihood = -res.f;
  out.trace.clear();
  for (double f : res.trace) out.trace.push_back(-f);
  out.converged = res.converged;
  if (!res.converged) {
    std::ostringstream msg;
    msg << "SMLE stopped after " << res.iterations
        << " iterations with gradient norm " << res.grad.lpNorm<Eigen::Infinity>();
    out.note = msg.str();
  }
  return out;
}

// Utilities of the current model per user: rows x B.
std::vector<Matrix> model_utilities(const std::vector<UserBlock>& blocks,
                                    const SimulationDraws& sd,
                                    const MixedLogitModel& model) {
  const std::vector<int> coords = selected_indices(model.selected);
  std::vector<Matrix> out(blocks.size());
  for (std::size_t u = 0; u < blocks.size(); ++u) {
    const UserBlock& b = blocks[u];
    out[u] = Matrix::Zero(b.rows.rows(), sd.draws[u].cols());
    for (int c : coords) {
      const Vector wrow =
          (model.sigma[c] * sd.draws[u].row(c).transpose()).array() + model.mu[c];
      out[u].noalias() += b.rows.col(c) * wrow.transpose();
    }
  }
  return out;
}

double empty_log_likelihood(std::span<const UserObservations> data) {
  double ll = 0.0;
  for (const auto& user : data) {
    for (const auto& o : user) {
      ll -= std::log(static_cast<double>(o.alternatives.rows()));
    }
  }
  return ll;
}

Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  const Vector sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sd.asDiagonal();
}

}  // namespace

// --- Observations -------------------------------------------------------------

UserObservations observations_from_ranking(const Scenario& scenario) {
  UserObservations out;
  std::vector<int> remaining(scenario.alternatives.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  for (std::size_t pos = 0; pos + 1 < scenario.ranking.size(); ++pos) {
    ChoiceObservation o;
    const auto dim = scenario.alternatives.front().size();
    o.alternatives.resize(static_cast<Eigen::Index>(remaining.size()), dim);
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      o.alternatives.row(static_cast<Eigen::Index>(i)) =
          scenario.alternatives[static_cast<std::size_t>(remaining[i])].transpose();
      if (remaining[i] == scenario.ranking[pos]) o.chosen = static_cast<int>(i);
    }
    out.push_back(std::move(o));
    remaining.erase(
        std::find(remaining.begin(), remaining.end(), scenario.ranking[pos]));
  }
  return out;
}

UserObservations observations_from_user(const UserData& user) {
  UserObservations out;
  for (const auto& s : user.scenarios) {
    auto obs = observations_from_ranking(s);
    out.insert(out.end(), obs.begin(), obs.end());
  }
  return out;
}

UserObservations observations_from_comparisons(const TrainingSet& examples) {
  UserObservations out;
  for (const auto& ex : examples) {
    ChoiceObservation o;
    o.alternatives = Matrix::Zero(2, ex.d.size());
    o.alternatives.row(0) = ex.d.transpose();
    o.chosen = 0;
    out.push_back(std::move(o));
  }
  return out;
}

Vector mnl_probability(const ChoiceObservation& obs, const Vector& w) {
  if (obs.alternatives.cols() != w.size()) {
    throw ConfigError("mnl_probability: dimension mismatch");
  }
  const Vector u = obs.alternatives * w;
  const double m = u.maxCoeff();
  Vector p = (u.array() - m).exp().matrix();
  return p / p.sum();
}

Vector log_choice_probability(const UserObservations& obs, const Matrix& w) {
  Vector out = Vector::Zero(w.cols());
  for (const auto& o : obs) {
    const Matrix u = o.alternatives * w;
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      out[c] += u(o.chosen, c) - log_sum_exp(u.col(c));
    }
  }
  return out;
}

// --- MixedLogitModel ----------------------------------------------------------

int MixedLogitModel::num_selected() const {
  return static_cast<int>(std::count(selected.begin(), selected.end(), true));
}

int MixedLogitModel::num_parameters(bool sigma_free) const {
  return (sigma_free ? 2 : 1) * num_selected();
}

MixedLogitModel MixedLogitModel::empty(Eigen::Index dim) {
  MixedLogitModel m;
  m.mu = Vector::Zero(dim);
  m.sigma = Vector::Zero(dim);
  m.selected.assign(static_cast<std::size_t>(dim), false);
  return m;
}

MixedLogitModel MixedLogitModel::all_selected(Eigen::Index dim, double sigma0) {
  MixedLogitModel m = empty(dim);
  m.sigma.setConstant(sigma0);
  m.selected.assign(static_cast<std::size_t>(dim), true);
  return m;
}

SimulationDraws make_draws(std::size_t num_users, Eigen::Index dim, int draws,
                           std::uint64_t seed) {
  if (draws < 1) throw ConfigError("number of draws must be >= 1");
  SimulationDraws sd;
  std::normal_distribution<double> normal;
  for (std::size_t u = 0; u < num_users; ++u) {
    Rng rng(derive_seed(seed, {u}));
    Matrix m(dim, draws);
    // Column-major fill: draw b is generated as one contiguous block.
    for (Eigen::Index b = 0; b < draws; ++b) {
      for (Eigen::Index j = 0; j < dim; ++j) m(j, b) = normal(rng);
    }
    sd.draws.push_back(std::move(m));
  }
  return sd;
}

double simulated_log_likelihood(std::span<const UserObservations> data,
                                const MixedLogitModel& model,
                                const SimulationDraws& draws) {
  const auto blocks = stack_all(data, model.dim());
  const std::vector<int> coords = selected_indices(model.selected);
  Vector mu(static_cast<Eigen::Index>(coords.size()));
  Vector s(mu.size());
  for (std::size_t j = 0; j < coords.size(); ++j) {
    mu[static_cast<Eigen::Index>(j)] = model.mu[coords[j]];
    s[static_cast<Eigen::Index>(j)] = model.sigma[coords[j]];
  }
  return sim_ll(blocks, draws, coords, mu, s, true, nullptr, nullptr);
}

MixedLogitModel smle_fit(std::span<const UserObservations> data,
                         const MixedLogitModel& initial,
                         const SimulationDraws& draws,
                         const SmleOptions& options) {
  std::size_t n_obs = 0;
  for (const auto& u : data) n_obs += u.size();
  if (n_obs == 0) {
    MixedLogitModel out = initial;
    out.flagged = true;
    out.note = "no observations; initial model returned unchanged";
    return out;
  }
  if (draws.draws.size() < data.size()) {
    throw ConfigError("smle_fit: fewer draw blocks than users");
  }
  const auto blocks = stack_all(data, initial.dim());
  return fit_selected(blocks, draws, initial, options);
}

MixedLogitModel smle_fit(std::span<const UserObservations> data,
                         const MixedLogitModel& initial,
                         const SmleOptions& options) {
  const SimulationDraws draws =
      make_draws(data.size(), initial.dim(), options.draws, options.seed);
  return smle_fit(data, initial, draws, options);
}

Vector mnl_fit(std::span<const UserObservations> data,
               const std::vector<bool>& selected, int max_iterations,
               double tolerance) {
  const std::vector<int> coords = selected_indices(selected);
  const auto k = static_cast<Eigen::Index>(coords.size());
  Vector beta = Vector::Zero(k);
  auto evaluate = [&](const Vector& b, Vector* grad, Matrix* hess) {
    double ll = 0.0;
    if (grad) grad->setZero(k);
    if (hess) hess->setZero(k, k);
    for (const auto& user : data) {
      for (const auto& o : user) {
        const Matrix x = select_cols(o.alternatives, coords);
        const Vector u = x * b;
        const double lse = log_sum_exp(u);
        ll += u[o.chosen] - lse;
        const Vector p = (u.array() - lse).exp().matrix();
        const Vector mean_x = x.transpose() * p;
        if (grad) *grad += x.row(o.chosen).transpose() - mean_x;
        if (hess) {
          const Matrix centered = x.rowwise() - mean_x.transpose();
          hess->noalias() -= centered.transpose() * p.asDiagonal() * centered;
        }
      }
    }
    return ll;
  };
  Vector g;
  Matrix h;
  double ll = evaluate(beta, &g, &h);
  for (int it = 0; it < max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < tolerance) break;
    Eigen::LDLT<Matrix> ldlt(-h);
    Vector step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = g;
    double alpha = 1.0;
    Vector trial;
    double ll_trial = ll;
    for (int bt = 0; bt < 30; ++bt) {
      trial = beta + alpha * step;
      ll_trial = evaluate(trial, nullptr, nullptr);
      if (ll_trial >= ll + 1e-4 * alpha * g.dot(step)) break;
      alpha *= 0.5;
    }
    if (!(ll_trial >= ll)) break;
    beta = trial;
    ll = evaluate(beta, &g, &h);
  }
  Vector full = Vector::Zero(static_cast<Eigen::Index>(selected.size()));
  for (Eigen::Index j = 0; j < k; ++j) full[coords[static_cast<std::size_t>(j)]] = beta[j];
  return full;
}

// --- AIC selection --------------------------------------------------------------

double aic(double log_likelihood, int num_parameters) {
  return 2.0 * num_parameters - 2.0 * log_likelihood;
}

AicResult aic_select(std::span<const UserObservations> data,
                     const std::vector<bool>& candidates,
                     const SmleOptions& options) {
  if (std::none_of(candidates.begin(), candidates.end(),
                   [](bool b) { return b; })) {
    throw ConfigError("aic_select needs at least one candidate feature");
  }
  const auto dim = static_cast<Eigen::Index>(candidates.size());
  const auto blocks = stack_all(data, dim);
  const SimulationDraws sd =
      make_draws(data.size(), dim, options.draws, options.seed);
  const bool sigma_free = !options.fix_sigma_zero;
  const int per_feature = sigma_free ? 2 : 1;

  MixedLogitModel current = MixedLogitModel::empty(dim);
  current.log_likelihood = empty_log_likelihood(data);
  current.converged = true;
  double current_aic = aic(current.log_likelihood, 0);
  AicResult result;
  result.empty_aic = current_aic;

  // A candidate whose column equals a lower-index candidate's in every
  // observation is not identifiable next to it; only the lower index stays
  // eligible, which settles exact ties independently of the draws.
  std::vector<bool> eligible = candidates;
  for (Eigen::Index j = 1; j < dim; ++j) {
    if (!eligible[static_cast<std::size_t>(j)]) continue;
    for (Eigen::Index i = 0; i < j; ++i) {
      if (!eligible[static_cast<std::size_t>(i)]) continue;
      const bool same = std::all_of(blocks.begin(), blocks.end(), [&](const UserBlock& b) {
        return b.rows.col(i) == b.rows.col(j);
      });
      if (same) {
        eligible[static_cast<std::size_t>(j)] = false;
        break;
      }
    }
  }

  SmleOptions interim = options;
  interim.gradient_tolerance =
      std::max(options.gradient_tolerance, options.selection_tolerance);

  // Ranks the unselected candidates by the score statistic of mu_j at the
  // current model (squared total score over its per-user outer product).
  auto rank_candidates = [&](const std::vector<Matrix>& offsets) {
    Vector total = Vector::Zero(dim);
    Vector outer = Vector::Zero(dim);
    Matrix g;
    for (std::size_t u = 0; u < blocks.size(); ++u) {
      if (blocks[u].start.empty()) continue;
      user_sim_ll(blocks[u], offsets[u], &g);
      const Vector score = blocks[u].rows.transpose() * g.rowwise().sum();
      total += score;
      outer += score.cwiseAbs2();
    }
    std::vector<std::pair<double, int>> ranked;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (!eligible[ju] || current.selected[ju]) continue;
      const double stat = outer[j] > 0.0 ? total[j] * total[j] / outer[j] : 0.0;
      ranked.emplace_back(-stat, static_cast<int>(j));
    }
    std::stable_sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    const auto keep = static_cast<std::size_t>(std::max(1, options.screening_candidates));
    for (std::size_t i = 0; i < ranked.size() && i < keep; ++i) {
      out.push_back(ranked[i].second);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  // Best single addition among the screened candidates, each fitted in
  // (mu_j, sigma_j) with the current model held fixed, then refitted jointly.
  auto try_add = [&]() -> bool {
    const auto offsets = model_utilities(blocks, sd, current);
    int best_j = -1;
    double best_aic = current_aic;
    Vector best_theta;
    for (int j : rank_candidates(offsets)) {
      const std::vector<int> coords = {j};
      const Objective obj = [&](const Vector& th, Vector* grad) {
        const Vector mu = th.head(1);
        const Vector s = sigma_free ? Vector(th.tail(1)) : Vector::Zero(1);
        const double ll =
            sim_ll(blocks, sd, coords, mu, s, sigma_free, &offsets, grad);
        if (grad != nullptr) *grad = -*grad;
        return -ll;
      };
      Vector theta0 = Vector::Zero(per_feature);
      if (sigma_free) theta0[1] = 0.1;
      const BfgsResult res = minimize_bfgs(obj, theta0, 100, 1e-6);
      const double cand_aic =
          aic(-res.f, current.num_parameters(sigma_free) + per_feature);
      if (cand_aic < best_aic - 1e-9) {
        best_aic = cand_aic;
        best_j = j;
        best_theta = res.x;
      }
    }
    if (best_j < 0) return false;
    MixedLogitModel next = current;
    next.selected[static_cast<std::size_t>(best_j)] = true;
    next.mu[best_j] = best_theta[0];
    next.sigma[best_j] = sigma_free ? best_theta[1] : 0.0;
    next = fit_selected(blocks, sd, next, interim);
    const double next_aic = aic(next.log_likelihood, next.num_parameters(sigma_free));
    if (!(next_aic < current_aic - 1e-9)) return false;
    current = std::move(next);
    current_aic = next_aic;
    return true;
  };

  // Best single deletion, screened without re-optimising.
  auto try_remove = [&]() -> bool {
    int best_j = -1;
    double best_aic = current_aic;
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!current.selected[static_cast<std::size_t>(j)]) continue;
      MixedLogitModel reduced = current;
      reduced.selected[static_cast<std::size_t>(j)] = false;
      reduced.mu[j] = 0.0;
      reduced.sigma[j] = 0.0;
      const auto offsets = model_utilities(blocks, sd, reduced);
      const double ll = sim_ll(blocks, sd, {}, Vector(), Vector(), sigma_free,
                               &offsets, nullptr);
      const double cand_aic =
          aic(ll, current.num_parameters(sigma_free) - per_feature);
      if (cand_aic < best_aic - 1e-9) {
        best_aic = cand_aic;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j < 0) return false;
    MixedLogitModel next = current;
    next.selected[static_cast<std::size_t>(best_j)] = false;
    next.mu[best_j] = 0.0;
    next.sigma[best_j] = 0.0;
    next = fit_selected(blocks, sd, next, interim);
    const double next_aic = aic(next.log_likelihood, next.num_parameters(sigma_free));
    if (!(next_aic < current_aic - 1e-9)) return false;
    current = std::move(next);
    current_aic = next_aic;
    return true;
  };

  while (try_add()) {
  }
  result.forward_aic = current_aic;
  result.forward_selected = current.selected;

  // Stops once neither a deletion nor an addition improves; each accepted
  // move strictly lowers the AIC, so this terminates.
  for (;;) {
    const bool removed = try_remove();
    const bool added = try_add();
    if (!removed && !added) break;
  }
  // Final refit of the chosen subset to full tolerance.
  if (current.num_selected() > 0) {
    MixedLogitModel polished = fit_selected(blocks, sd, current, options);
    const double polished_aic =
        aic(polished.log_likelihood, polished.num_parameters(sigma_free));
    if (polished_aic <= current_aic) {
      current = std::move(polished);
      current_aic = polished_aic;
    }
  }
  result.model = std::move(current);
  result.aic = current_aic;
  return result;
}

MixedLogitModel reintroduce_excluded(const MixedLogitModel& model) {
  MixedLogitModel out = model;
  std::vector<double> sel_sigma;
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    if (model.selected[j]) {
      sel_sigma.push_back(model.sigma[static_cast<Eigen::Index>(j)]);
    }
  }
  double fill = 1.0;
  if (sel_sigma.empty()) {
    out.flagged = true;
    out.note = "no selected features; excluded sigma set to 1.0";
  } else {
    std::sort(sel_sigma.begin(), sel_sigma.end());
    const std::size_t n = sel_sigma.size();
    fill = n % 2 == 1 ? sel_sigma[n / 2]
                      : 0.5 * (sel_sigma[n / 2 - 1] + sel_sigma[n / 2]);
  }
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    if (!model.selected[j]) {
      out.mu[static_cast<Eigen::Index>(j)] = 0.0;
      out.sigma[static_cast<Eigen::Index>(j)] = fill;
      out.selected[j] = true;
    }
  }
  return out;
}

// --- Individual-level parameters -------------------------------------------------

IndividualEstimate individual_parameters(const GaussianBelief& population,
                                         const UserObservations& user,
                                         int draws, std::uint64_t seed) {
  if (draws < 1) throw ConfigError("individual_parameters needs B >= 1");
  const Eigen::Index dim = population.dim();
  const Matrix root = psd_sqrt(population.cov);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Matrix z(dim, draws);
  for (Eigen::Index b = 0; b < draws; ++b) {
    for (Eigen::Index j = 0; j < dim; ++j) z(j, b) = normal(rng);
  }
  Matrix w = root * z;
  w.colwise() += population.mean;

  IndividualEstimate est;
  Vector log_g = log_choice_probability(user, w);
  Vector g;
  const double lse = log_sum_exp(log_g);
  if (std::isfinite(lse)) {
    g = (log_g.array() - lse).exp().matrix();
  } else {
    g = Vector::Constant(draws, 1.0 / draws);
    est.fallback = true;
  }
  est.profile = w * g;
  est.effective_sample_size = 1.0 / g.squaredNorm();
  return est;
}

IndividualEstimate individual_parameters(const MixedLogitModel& model,
                                         const UserObservations& user,
                                         int draws, std::uint64_t seed) {
  GaussianBelief pop{model.mu, Matrix(model.sigma.cwiseAbs2().asDiagonal())};
  return individual_parameters(pop, user, draws, seed);
}

// --- Pooled ML prior ---------------------------------------------------------------

MlPriorResult ml_prior_benchmark(std::span<const TrainingSet> training_users,
                                 const BoxBounds& bounds,
                                 const MapOptions& options) {
  const Eigen::Index dim = bounds.dim();
  TrainingSet pool;
  for (const auto& user : training_users) {
    pool.insert(pool.end(), user.begin(), user.end());
  }
  MlPriorResult out;
  out.uninformative.assign(static_cast<std::size_t>(dim), true);
  for (const auto& ex : pool) {
    if (ex.d.size() != dim) throw ConfigError("ml_prior: dimension mismatch");
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (ex.d[j] != 0.0) out.uninformative[static_cast<std::size_t>(j)] = false;
    }
  }
  // Near-flat prior: only keeps directions without information finite.
  const GaussianBelief vague{Vector::Zero(dim),
                             1e8 * Matrix::Identity(dim, dim)};
  const GaussianBelief fit = map_estimate(pool, vague, bounds, options);

  std::vector<int> informative;
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (!out.uninformative[static_cast<std::size_t>(j)]) {
      informative.push_back(static_cast<int>(j));
    }
  }
  Vector mean = fit.mean;
  Vector var = Vector::Constant(dim, 1e-6);
  if (!informative.empty()) {
    const auto k = static_cast<Eigen::Index>(informative.size());
    Matrix info = Matrix::Zero(k, k);
    for (const auto& ex : pool) {
      const double s = sigmoid(ex.d.dot(fit.mean));
      Vector dk(k);
      for (Eigen::Index a = 0; a < k; ++a) dk[a] = ex.d[informative[a]];
      info.noalias() += s * (1.0 - s) * dk * dk.transpose();
    }
    const Matrix cov = floor_eigenvalues(info, 1e-6).inverse();
    for (Eigen::Index a = 0; a < k; ++a) {
      var[informative[a]] = std::max(cov(a, a), 1e-6);
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (out.uninformative[static_cast<std::size_t>(j)]) mean[j] = 0.0;
  }
  out.prior = {mean, Matrix(var.asDiagonal())};
  return out;
}

}  // namespace favour
