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

#include "favour/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "favour/errors.hpp"
#include "favour/random.hpp"

namespace favour {
namespace {

constexpr double kPriorRidge = 1e-8;
constexpr double kCovarianceFloor = 1e-10;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

Matrix invert_spd(const Matrix& m, const char* what) {
  const Eigen::Index n = m.rows();
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) {
    return llt.solve(Matrix::Identity(n, n));
  }
  llt.compute(m + kPriorRidge * Matrix::Identity(n, n));
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(what) + " is singular");
  }
  return llt.solve(Matrix::Identity(n, n));
}

// One projected-Newton solve of min f(w) = -L(w) over the box.
struct SolveResult {
  Vector w;
  double objective = 0.0;  // -L(w)
  int iterations = 0;
  bool converged = false;
};

double projected_gradient_norm(const Vector& w, const Vector& g,
                               const BoxBounds& box) {
  double sq = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double step = std::clamp(w[i] - g[i], box.lower[i], box.upper[i]);
    const double pg = w[i] - step;
    sq += pg * pg;
  }
  return std::sqrt(sq);
}

SolveResult projected_newton(const LogPosterior& post, const BoxBounds& box,
                             Vector w, const MapOptions& opt) {
  const Eigen::Index n = w.size();
  Vector grad(n);
  Matrix hess(n, n);
  SolveResult res;

  // Minimise f = -L; the sign flips are folded in below.
  double f = -post.evaluate(w, &grad, &hess);
  grad = -grad;
  hess = -hess;

  for (int it = 0; it < opt.max_iterations; ++it) {
    const double pg_norm = projected_gradient_norm(w, grad, box);
    res.iterations = it;
    if (pg_norm < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    // Active set: at a bound with the gradient pushing outward.
    const double eps = std::min(1e-8, pg_norm);
    std::vector<Eigen::Index> free_idx;
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = w[i] <= box.lower[i] + eps && grad[i] > 0.0;
      const bool at_upper = w[i] >= box.upper[i] - eps && grad[i] < 0.0;
      if (at_lower || at_upper) {
        active[static_cast<std::size_t>(i)] = true;
      } else {
        free_idx.push_back(i);
      }
    }

    Vector dir = Vector::Zero(n);
    const auto nf = static_cast<Eigen::Index>(free_idx.size());
    if (nf > 0) {
      Matrix h_ff(nf, nf);
      Vector g_f(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        g_f[a] = grad[free_idx[a]];
        for (Eigen::Index b = 0; b < nf; ++b) {
          h_ff(a, b) = hess(free_idx[a], free_idx[b]);
        }
      }
      Eigen::LLT<Matrix> llt(h_ff);
      Vector p_f = llt.info() == Eigen::Success ? Vector(llt.solve(-g_f))
                                                : Vector(-g_f);
      for (Eigen::Index a = 0; a < nf; ++a) dir[free_idx[a]] = p_f[a];
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)]) {
        dir[i] = -grad[i] / std::max(hess(i, i), 1e-12);
      }
    }

    double alpha = 1.0;
    bool accepted = false;
    Vector trial(n);
    double f_trial = f;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      trial = box.project(w + alpha * dir);
      f_trial = -post.value(trial);
      double decrease = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        decrease += active[static_cast<std::size_t>(i)]
                        ? grad[i] * (w[i] - trial[i])
                        : -alpha * grad[i] * dir[i];
      }
      if (std::isfinite(f_trial) && f - f_trial >= kArmijo * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No representable decrease left; stop at the current iterate.
      res.iterations = it + 1;
      break;
    }
    w = trial;
    f = -post.evaluate(w, &grad, &hess);
    grad = -grad;
    hess = -hess;
    res.iterations = it + 1;
  }
  if (!res.converged) {
    res.converged =
        projected_gradient_norm(w, grad, box) < opt.gradient_tolerance;
  }
  res.w = std::move(w);
  res.objective = f;
  return res;
}

}  // namespace

// --- GaussianBelief / BoxBounds ---------------------------------------------

GaussianBelief GaussianBelief::standard(Eigen::Index dim) {
  return {Vector::Zero(dim), Matrix::Identity(dim, dim)};
}

void GaussianBelief::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ConfigError("belief covariance shape does not match mean");
  }
  if (!mean.allFinite() || !cov.allFinite()) {
    throw NumericError("belief contains non-finite values");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw NumericError("belief covariance is not symmetric");
  }
  if (mean.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) {
      throw NumericError("belief covariance is not positive semidefinite");
    }
  }
}

BoxBounds BoxBounds::unbounded(Eigen::Index dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(dim, -inf), Vector::Constant(dim, inf)};
}

BoxBounds BoxBounds::route_default() {
  BoxBounds b = unbounded(kFeatureDim);
  b.upper.tail(kNumQuantitative).setZero();
  return b;
}

bool BoxBounds::contains(const Vector& w) const {
  return w.size() == lower.size() && (w.array() >= lower.array()).all() &&
         (w.array() <= upper.array()).all();
}

Vector BoxBounds::project(const Vector& w) const {
  return w.cwiseMax(lower).cwiseMin(upper);
}

void BoxBounds::validate(Eigen::Index expected_dim) const {
  if (lower.size() != expected_dim || upper.size() != expected_dim) {
    throw ConfigError("box bounds dimension differs from the problem");
  }
  for (Eigen::Index i = 0; i < expected_dim; ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
      std::ostringstream msg;
      msg << "infeasible bounds at coordinate " << i << ": [" << lower[i]
          << ", " << upper[i] << "]";
      throw ConfigError(msg.str());
    }
  }
}

// --- Likelihood -------------------------------------------------------------

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double pair_probability(const Vector& d, const Vector& w) {
  if (d.size() != w.size()) {
    throw ConfigError("pair_probability: dimension mismatch");
  }
  const double z = w.dot(d);
  if (!std::isfinite(z)) throw NumericError("non-finite utility difference");
  return sigmoid(z);
}

LogPosterior::LogPosterior(const TrainingSet& examples,
                           const GaussianBelief& prior)
    : differences_(static_cast<Eigen::Index>(examples.size()), prior.dim()),
      prior_mean_(prior.mean) {
  if (prior.cov.rows() != prior.dim() || prior.cov.cols() != prior.dim()) {
    throw ConfigError("prior covariance shape does not match mean");
  }
  for (std::size_t t = 0; t < examples.size(); ++t) {
    const Vector& d = examples[t].d;
    if (d.size() != prior.dim()) {
      std::ostringstream msg;
      msg << "comparison " << t << " has dimension " << d.size()
          << ", prior has " << prior.dim();
      throw ConfigError(msg.str());
    }
    if (!d.allFinite()) throw NumericError("comparison has non-finite entries");
    differences_.row(static_cast<Eigen::Index>(t)) = d.transpose();
  }
  precision_ = invert_spd(prior.cov, "prior covariance");
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double LogPosterior::evaluate(const Vector& w, Vector* gradient,
                              Matrix* hessian) const {
  const Vector delta = w - prior_mean_;
  const Vector p_delta = precision_ * delta;
  double value = -0.5 * delta.dot(p_delta);
  const Vector z = differences_ * w;
  for (Eigen::Index t = 0; t < z.size(); ++t) value += log_sigmoid(z[t]);
  if (gradient != nullptr) {
    Vector resid(z.size());
    for (Eigen::Index t = 0; t < z.size(); ++t) resid[t] = sigmoid(-z[t]);
    *gradient = differences_.transpose() * resid - p_delta;
  }
  if (hessian != nullptr) {
    Vector curv(z.size());
    for (Eigen::Index t = 0; t < z.size(); ++t) {
      const double s = sigmoid(z[t]);
      curv[t] = s * (1.0 - s);
    }
    *hessian = -precision_;
    if (z.size() > 0) {
      hessian->noalias() -=
          differences_.transpose() * curv.asDiagonal() * differences_;
    }
  }
  return value;
}

double LogPosterior::value(const Vector& w) const {
  return evaluate(w, nullptr, nullptr);
}

Vector LogPosterior::gradient(const Vector& w) const {
  Vector g;
  evaluate(w, &g, nullptr);
  return g;
}

Matrix LogPosterior::hessian(const Vector& w) const {
  Matrix h;
  evaluate(w, nullptr, &h);
  return h;
}

// --- Inference --------------------------------------------------------------

Matrix floor_eigenvalues(const Matrix& m, double floor) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed");
  }
  if (es.eigenvalues().minCoeff() >= floor) return sym;
  const Vector ev = es.eigenvalues().cwiseMax(floor);
  Matrix out = es.eigenvectors() * ev.asDiagonal() *
               es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

GaussianBelief map_estimate(const TrainingSet& examples,
                            const GaussianBelief& prior,
                            const BoxBounds& bounds, const MapOptions& options,
                            MapDiagnostics* diagnostics) {
  const Eigen::Index n = prior.dim();
  if (prior.cov.rows() != n || prior.cov.cols() != n) {
    throw ConfigError("prior covariance shape does not match mean");
  }
  bounds.validate(n);
  if (options.runs < 1) throw ConfigError("map_estimate needs runs >= 1");

  if (examples.empty() && bounds.contains(prior.mean)) {
    if (diagnostics != nullptr) *diagnostics = MapDiagnostics{0.0, 0, 0, 1};
    return prior;
  }

  const LogPosterior post(examples, prior);
  SolveResult best;
  int best_run = -1;
  int converged = 0;
  SolveResult best_any;
  for (int run = 0; run < options.runs; ++run) {
    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(run + 1)}));
    Vector start(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lo = std::max(bounds.lower[i], -options.start_range);
      const double hi = std::min(bounds.upper[i], options.start_range);
      if (lo <= hi) {
        start[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
      } else {
        // Box lies entirely outside the sampling cube.
        start[i] = std::abs(bounds.lower[i]) < std::abs(bounds.upper[i])
                       ? bounds.lower[i]
                       : bounds.upper[i];
      }
    }
    SolveResult r = projected_newton(post, bounds, start, options);
    if (best_any.w.size() == 0 || r.objective < best_any.objective) {
      best_any = r;
    }
    if (!r.converged) continue;
    ++converged;
    // Strict improvement keeps the lowest run index on ties.
    if (best_run < 0 || r.objective < best.objective) {
      best = std::move(r);
      best_run = run;
    }
  }
  if (best_run < 0) {
    std::ostringstream msg;
    msg << "MAP optimisation did not converge in " << options.max_iterations
        << " iterations (" << options.runs << " runs)";
    throw ConvergenceError(msg.str(), best_any.w, -best_any.objective);
  }

  Matrix neg_hess = -post.hessian(best.w);
  Matrix cov = invert_spd(neg_hess, "negative Hessian");
  cov = floor_eigenvalues(cov, kCovarianceFloor);
  if (diagnostics != nullptr) {
    *diagnostics = {-best.objective, best_run, best.iterations, converged};
  }
  return {best.w, cov};
}

GaussianBelief incremental_update(const GaussianBelief& belief,
                                  const TrainingSet& new_examples,
                                  const BoxBounds& bounds,
                                  const MapOptions& options) {
  if (new_examples.empty()) return belief;
  return map_estimate(new_examples, belief, bounds, options);
}

double predict_preference_d(const GaussianBelief& belief, const Vector& d) {
  if (d.size() != belief.dim()) {
    throw ConfigError("predict_preference: dimension mismatch");
  }
  const double var = std::max(0.0, d.dot(belief.cov * d));
  const double lambda = 1.0 / std::sqrt(1.0 + std::numbers::pi * var / 8.0);
  return sigmoid(lambda * belief.mean.dot(d));
}

double predict_preference(const GaussianBelief& belief, const Vector& fv_r,
                          const Vector& fv_q) {
  if (fv_r.size() != fv_q.size()) {
    throw ConfigError("predict_preference: routes differ in dimension");
  }
  return predict_preference_d(belief, fv_r - fv_q);
}

double gaussian_kl(const GaussianBelief& p, const GaussianBelief& q) {
  const Eigen::Index k = p.dim();
  if (q.dim() != k) throw ConfigError("gaussian_kl: dimension mismatch");
  Eigen::LLT<Matrix> llt_q(q.cov);
  if (llt_q.info() != Eigen::Success) {
    throw NumericError("gaussian_kl: covariance of q is singular");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es_p(0.5 * (p.cov + p.cov.transpose()),
                                             Eigen::EigenvaluesOnly);
  if (es_p.eigenvalues().minCoeff() <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double logdet_p = es_p.eigenvalues().array().log().sum();
  const Matrix l = llt_q.matrixL();
  const double logdet_q = 2.0 * l.diagonal().array().log().sum();
  const double trace_term = llt_q.solve(p.cov).trace();
  const Vector diff = q.mean - p.mean;
  const double maha = diff.dot(llt_q.solve(diff));
  const double kl = 0.5 * (trace_term + maha - static_cast<double>(k) +
                           logdet_q - logdet_p);
  return std::max(0.0, kl);
}

}  // namespace favour
