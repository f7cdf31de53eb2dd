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
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "favour/errors.hpp"
#include "favour/random.hpp"

namespace favour {
namespace {

Vector gaussian_vector(Rng& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

Matrix random_spd(Rng& rng, Eigen::Index n) {
  const Matrix a = Matrix::NullaryExpr(n, n, [&] {
    return std::normal_distribution<double>(0.0, 0.5)(rng);
  });
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

TrainingSet random_set(Rng& rng, int n, Eigen::Index dim, double scale = 1.0) {
  TrainingSet t;
  for (int i = 0; i < n; ++i) t.push_back({gaussian_vector(rng, dim, scale)});
  return t;
}

// Straightforward scalar re-statement of the log posterior, used as an
// oracle against the vectorised implementation.
double oracle_log_posterior(const Vector& w, const TrainingSet& t,
                            const Vector& mu, const Matrix& cov) {
  double ll = 0.0;
  for (const auto& ex : t) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) z += w[j] * ex.d[j];
    ll += -std::log1p(std::exp(-z));
  }
  const Vector r = w - mu;
  return ll - 0.5 * r.dot(cov.ldlt().solve(r));
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

TEST(PairProbability, ClosedForms) {
  const Vector w = Vector::Unit(3, 0);
  EXPECT_DOUBLE_EQ(pair_probability(Vector::Zero(3), w), 0.5);
  EXPECT_NEAR(pair_probability(Vector::Unit(3, 0) * std::log(3.0), w), 0.75,
              1e-15);
  EXPECT_NEAR(pair_probability(Vector::Unit(3, 0) * -std::log(3.0), w), 0.25,
              1e-15);
}

TEST(PairProbability, ComplementSumsToOne) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vector d = gaussian_vector(rng, 7, 3.0);
    const Vector w = gaussian_vector(rng, 7);
    EXPECT_DOUBLE_EQ(pair_probability(d, w) + pair_probability(-d, w), 1.0);
  }
}

TEST(PairProbability, Errors) {
  EXPECT_THROW(pair_probability(Vector::Zero(2), Vector::Zero(3)), ConfigError);
  Vector d = Vector::Ones(2);
  d[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(pair_probability(d, Vector::Ones(2)), NumericError);
}

TEST(LogPosterior, PriorModeIsZero) {
  const GaussianBelief prior{Vector::Constant(4, 0.3), Matrix::Identity(4, 4)};
  const LogPosterior lp({}, prior);
  EXPECT_EQ(lp.value(prior.mean), 0.0);
}

TEST(LogPosterior, SingleNeutralExample) {
  Vector d(2);
  d << 1.0, -1.0;
  const GaussianBelief prior{Vector::Ones(2), Matrix::Identity(2, 2)};
  const LogPosterior lp({{d}}, prior);
  EXPECT_NEAR(lp.value(prior.mean), std::log(0.5), 1e-15);
}

TEST(LogPosterior, MatchesScalarOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng() % 10);
    const TrainingSet t = random_set(rng, static_cast<int>(rng() % 20), dim, 2.0);
    const GaussianBelief prior{gaussian_vector(rng, dim), random_spd(rng, dim)};
    const Vector w = gaussian_vector(rng, dim);
    // Values agree up to the dropped constant, so compare differences.
    const Vector w2 = gaussian_vector(rng, dim);
    const LogPosterior lp(t, prior);
    EXPECT_NEAR(lp.value(w) - lp.value(w2),
                oracle_log_posterior(w, t, prior.mean, prior.cov) -
                    oracle_log_posterior(w2, t, prior.mean, prior.cov),
                1e-9);
  }
}

TEST(LogPosterior, GradientAndHessianMatchFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng() % 12);
    const TrainingSet t = random_set(rng, 1 + static_cast<int>(rng() % 30), dim);
    const GaussianBelief prior{gaussian_vector(rng, dim), random_spd(rng, dim)};
    const Vector w = gaussian_vector(rng, dim);
    const LogPosterior lp(t, prior);
    Vector fd_grad(dim);
    Matrix fd_hess(dim, dim);
    const double h = 1e-5;
    for (Eigen::Index j = 0; j < dim; ++j) {
      const Vector e = Vector::Unit(dim, j) * h;
      fd_grad[j] = (oracle_log_posterior(w + e, t, prior.mean, prior.cov) -
                    oracle_log_posterior(w - e, t, prior.mean, prior.cov)) /
                   (2 * h);
      fd_hess.col(j) = (lp.gradient(w + e) - lp.gradient(w - e)) / (2 * h);
    }
    EXPECT_LT(rel_err(lp.gradient(w), fd_grad), 1e-5);
    EXPECT_LT((lp.hessian(w) - fd_hess).norm() / std::max(1.0, fd_hess.norm()),
              1e-4);
  }
}

TEST(LogPosterior, HessianIsNegativeDefinite) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 2 + static_cast<Eigen::Index>(rng() % 8);
    const LogPosterior lp(random_set(rng, 15, dim, 3.0),
                          {gaussian_vector(rng, dim), random_spd(rng, dim)});
    const Matrix h = lp.hessian(gaussian_vector(rng, dim, 2.0));
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 0.0);
  }
}

TEST(LogPosterior, SingularPriorIsRegularised) {
  Matrix cov = Matrix::Zero(2, 2);
  cov(0, 0) = 1.0;
  EXPECT_NO_THROW(LogPosterior({}, {Vector::Zero(2), cov}));
}

TEST(MapEstimate, EmptySetReturnsPriorExactly) {
  Rng rng(5);
  const GaussianBelief prior{gaussian_vector(rng, 6), random_spd(rng, 6)};
  const GaussianBelief post =
      map_estimate({}, prior, BoxBounds::unbounded(6));
  EXPECT_EQ(post.mean, prior.mean);
  EXPECT_EQ(post.cov, prior.cov);
}

// Bisection on the gradient 1 - sigmoid(w) - w of the 1-D problem.
double bisection_root() {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = 1.0 - 1.0 / (1.0 + std::exp(-mid)) - mid;
    (g > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(MapEstimate, OneDimensionalRoot) {
  const double root = bisection_root();
  EXPECT_NEAR(root, 0.401, 5e-4);
  const GaussianBelief post = map_estimate(
      {{Vector::Ones(1)}}, GaussianBelief::standard(1), BoxBounds::unbounded(1));
  EXPECT_NEAR(post.mean[0], root, 1e-8);
  const double s = 1.0 / (1.0 + std::exp(-root));
  EXPECT_NEAR(post.cov(0, 0), 1.0 / (1.0 + s * (1 - s)), 1e-8);
}

TEST(MapEstimate, ActiveUpperBound) {
  BoxBounds box = BoxBounds::unbounded(1);
  box.upper[0] = 0.2;
  const GaussianBelief post =
      map_estimate({{Vector::Ones(1)}}, GaussianBelief::standard(1), box);
  EXPECT_DOUBLE_EQ(post.mean[0], 0.2);
  // Laplace covariance still comes from the full Hessian at the bound.
  const double s = 1.0 / (1.0 + std::exp(-0.2));
  EXPECT_NEAR(post.cov(0, 0), 1.0 / (1.0 + s * (1 - s)), 1e-12);
}

TEST(MapEstimate, InfeasibleBoundsAreConfigError) {
  BoxBounds box = BoxBounds::unbounded(2);
  box.lower[1] = 1.0;
  box.upper[1] = 0.0;
  EXPECT_THROW(map_estimate({{Vector::Ones(2)}}, GaussianBelief::standard(2), box),
               ConfigError);
}

TEST(MapEstimate, ExhaustedIterationsCarryBestIterate) {
  Rng rng(6);
  MapOptions opt;
  opt.max_iterations = 1;
  opt.gradient_tolerance = 1e-300;
  try {
    map_estimate(random_set(rng, 20, 5, 3.0), GaussianBelief::standard(5),
                 BoxBounds::unbounded(5), opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.best_iterate().size(), 5);
    EXPECT_TRUE(std::isfinite(e.best_objective()));
  }
}

TEST(MapEstimate, BoxDefaultKeepsQuantitativeWeightsNonPositive) {
  Rng rng(7);
  const TrainingSet t = random_set(rng, 40, kFeatureDim, 2.0);
  const GaussianBelief post =
      map_estimate(t, GaussianBelief::standard(kFeatureDim),
                   BoxBounds::route_default());
  EXPECT_LE(post.mean.tail(kNumQuantitative).maxCoeff(), 0.0);
  EXPECT_TRUE(BoxBounds::route_default().contains(post.mean));
}

TEST(MapEstimate, DeterministicAndOrderInvariant) {
  Rng rng(8);
  TrainingSet t = random_set(rng, 25, 8, 1.5);
  const GaussianBelief prior{gaussian_vector(rng, 8), random_spd(rng, 8)};
  BoxBounds box = BoxBounds::unbounded(8);
  box.upper.tail(3).setZero();
  const GaussianBelief a = map_estimate(t, prior, box);
  const GaussianBelief b = map_estimate(t, prior, box);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.cov, b.cov);
  std::reverse(t.begin(), t.end());
  std::shuffle(t.begin(), t.end(), rng);
  const GaussianBelief c = map_estimate(t, prior, box);
  EXPECT_LT((a.mean - c.mean).norm(), 1e-7);
  EXPECT_LT((a.cov - c.cov).norm(), 1e-7);
}

TEST(MapEstimate, MultistartRunsAgreeOnConcaveProblem) {
  Rng rng(9);
  const TrainingSet t = random_set(rng, 10, 4);
  MapOptions one;
  one.runs = 1;
  MapDiagnostics d5, d1;
  const auto a = map_estimate(t, GaussianBelief::standard(4),
                              BoxBounds::unbounded(4), {}, &d5);
  const auto b = map_estimate(t, GaussianBelief::standard(4),
                              BoxBounds::unbounded(4), one, &d1);
  EXPECT_EQ(d5.converged_runs, 5);
  EXPECT_LT((a.mean - b.mean).norm(), 1e-7);
}

TEST(MapEstimate, CovarianceShrinksWithMoreData) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector w_true = gaussian_vector(rng, 5);
    TrainingSet all;
    for (int i = 0; i < 30; ++i) {
      Vector d = gaussian_vector(rng, 5);
      if (std::uniform_real_distribution<double>()(rng) >
          pair_probability(d, w_true)) {
        d = -d;
      }
      all.push_back({d});
    }
    const GaussianBelief prior = GaussianBelief::standard(5);
    double previous = prior.cov.trace();
    for (std::size_t n = 5; n <= all.size(); n += 5) {
      const TrainingSet t(all.begin(), all.begin() + static_cast<long>(n));
      const double tr =
          map_estimate(t, prior, BoxBounds::unbounded(5)).cov.trace();
      EXPECT_LE(tr, previous + 1e-6);
      previous = tr;
    }
  }
}

TEST(IncrementalUpdate, EmptyUpdateKeepsBelief) {
  Rng rng(11);
  const GaussianBelief b{gaussian_vector(rng, 3), random_spd(rng, 3)};
  const GaussianBelief u = incremental_update(b, {}, BoxBounds::unbounded(3));
  EXPECT_EQ(u.mean, b.mean);
  EXPECT_EQ(u.cov, b.cov);
}

TEST(IncrementalUpdate, SequentialCloseToBatch) {
  Vector d1(2), d2(2);
  d1 << 1.0, 0.5;
  d2 << -0.3, 1.2;
  const BoxBounds box = BoxBounds::unbounded(2);
  const GaussianBelief prior = GaussianBelief::standard(2);
  const GaussianBelief batch = map_estimate({{d1}, {d2}}, prior, box);
  const GaussianBelief seq =
      incremental_update(incremental_update(prior, {{d1}}, box), {{d2}}, box);
  EXPECT_LT((batch.mean - seq.mean).cwiseAbs().maxCoeff(), 0.05);
}

TEST(IncrementalUpdate, ContradictoryPairPullsTowardPrior) {
  Vector d(2);
  d << 1.5, -0.7;
  const BoxBounds box = BoxBounds::unbounded(2);
  const GaussianBelief prior = GaussianBelief::standard(2);
  const GaussianBelief single = incremental_update(prior, {{d}}, box);
  const GaussianBelief both = incremental_update(prior, {{d}, {-d}}, box);
  EXPECT_LT((both.mean - prior.mean).norm(), (single.mean - prior.mean).norm());
}

TEST(Predict, IdenticalRoutesGiveHalf) {
  Rng rng(12);
  const GaussianBelief b{gaussian_vector(rng, 4), random_spd(rng, 4)};
  const Vector r = gaussian_vector(rng, 4);
  EXPECT_EQ(predict_preference(b, r, r), 0.5);
}

TEST(Predict, ZeroCovarianceIsPlainLogit) {
  Rng rng(13);
  const GaussianBelief b{gaussian_vector(rng, 4), Matrix::Zero(4, 4)};
  const Vector d = gaussian_vector(rng, 4);
  EXPECT_DOUBLE_EQ(predict_preference_d(b, d), sigmoid(b.mean.dot(d)));
}

double monte_carlo_preference(const GaussianBelief& b, const Vector& d,
                              int draws, std::uint64_t seed) {
  // The utility difference w.d is univariate normal.
  const double m = b.mean.dot(d);
  const double s = std::sqrt(d.dot(b.cov * d));
  Rng rng(seed);
  std::normal_distribution<double> g;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) acc += 1.0 / (1.0 + std::exp(-(m + s * g(rng))));
  return acc / draws;
}

TEST(Predict, ClosedFormPlugIn) {
  // d'Sd = 8/pi and w'd = 1 gives s(1/sqrt 2).
  GaussianBelief b{Vector::Unit(1, 0), Matrix::Constant(1, 1, 8.0 / std::numbers::pi)};
  const double p = predict_preference_d(b, Vector::Ones(1));
  EXPECT_NEAR(p, 1.0 / (1.0 + std::exp(-1.0 / std::sqrt(2.0))), 1e-15);
  EXPECT_NEAR(p, 0.6698, 1e-4);
  EXPECT_NEAR(p, monte_carlo_preference(b, Vector::Ones(1), 1000000, 1), 0.005);
}

TEST(Predict, MonteCarloAgreement) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const GaussianBelief b{gaussian_vector(rng, 5), random_spd(rng, 5)};
    const Vector d = gaussian_vector(rng, 5);
    EXPECT_NEAR(predict_preference_d(b, d),
                monte_carlo_preference(b, d, 200000, rng()), 0.01);
  }
}

TEST(Predict, MonotoneInMeanUtility) {
  const Vector d = Vector::Ones(2);
  double previous = 0.0;
  for (double m = -5.0; m <= 5.0; m += 0.25) {
    const GaussianBelief b{Vector::Constant(2, m / 2.0), Matrix::Identity(2, 2)};
    const double p = predict_preference_d(b, d);
    EXPECT_GT(p, previous);
    previous = p;
  }
}

TEST(GaussianKl, Basics) {
  Rng rng(15);
  const GaussianBelief p{gaussian_vector(rng, 3), random_spd(rng, 3)};
  EXPECT_NEAR(gaussian_kl(p, p), 0.0, 1e-12);
  const GaussianBelief a{Vector::Zero(1), Matrix::Identity(1, 1)};
  const GaussianBelief b{Vector::Ones(1), Matrix::Identity(1, 1)};
  EXPECT_NEAR(gaussian_kl(a, b), 0.5, 1e-15);
}

TEST(GaussianKl, MatchesOneDimensionalClosedForm) {
  Rng rng(16);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double s1 = u(rng), s2 = u(rng), m1 = u(rng), m2 = u(rng);
    const GaussianBelief p{Vector::Constant(1, m1), Matrix::Constant(1, 1, s1)};
    const GaussianBelief q{Vector::Constant(1, m2), Matrix::Constant(1, 1, s2)};
    const double expected =
        0.5 * (s1 / s2 + (m2 - m1) * (m2 - m1) / s2 - 1.0 + std::log(s2 / s1));
    EXPECT_NEAR(gaussian_kl(p, q), expected, 1e-12);
  }
}

TEST(GaussianKl, NonNegativeOnRandomPairs) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng() % 6);
    const GaussianBelief p{gaussian_vector(rng, dim), random_spd(rng, dim)};
    const GaussianBelief q{gaussian_vector(rng, dim), random_spd(rng, dim)};
    EXPECT_GE(gaussian_kl(p, q), 0.0);
  }
}

TEST(GaussianKl, SingularReferenceIsNumericError) {
  const GaussianBelief p = GaussianBelief::standard(2);
  const GaussianBelief q{Vector::Zero(2), Matrix::Zero(2, 2)};
  EXPECT_THROW(gaussian_kl(p, q), NumericError);
}

TEST(FloorEigenvalues, ClampsSpectrum) {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -3.0;
  const Matrix f = floor_eigenvalues(m, 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> es(f);
  EXPECT_NEAR(es.eigenvalues().minCoeff(), 1e-10, 1e-16);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), 1.0, 1e-14);
}

}  // namespace
}  // namespace favour
