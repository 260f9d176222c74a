#include <doctest.h>

#include <cmath>

#include "dglasso/inner.hpp"
#include "oracles.hpp"

using namespace dglasso;

namespace {

Matrix<double> m1x1(double v) { return Matrix<double>::Constant(1, 1, v); }

SmoothingStats<double> scalar_stats(double psi, double delta, double phi) {
  return {m1x1(psi), m1x1(delta), m1x1(phi)};
}

// Realistic second-moment statistics from an actual smoothing pass.
SmoothingStats<double> sampled_stats(Index nx, std::uint64_t seed, Index K = 30) {
  Rng rng(seed);
  const auto params = testing::random_params(nx, nx, rng);
  const auto series = testing::random_series(params, K, rng);
  return smoothing_stats(params, series);
}

InnerConfig tight_config() {
  InnerConfig cfg;
  cfg.xi = 1e-8;
  cfg.max_iter = 200000;
  return cfg;
}

}  // namespace

TEST_CASE("transition update, unregularized scalar stationarity") {
  const auto result = solve_A_update<double>(
      m1x1(0), m1x1(1), scalar_stats(1, 1, 1), 0.0, 1.0, 2, tight_config());
  CHECK(result.solution(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(result.converged);
}

TEST_CASE("transition update collapses to zero under heavy regularization") {
  const auto stats = sampled_stats(3, 17);
  const Matrix<double> At = Matrix<double>::Zero(3, 3) .eval();
  const Matrix<double> Pt = Matrix<double>::Identity(3, 3);
  const Index K = 30;
  const double bound =
      (double(K) * (Pt * stats.Delta) + At).cwiseAbs().maxCoeff();
  const auto result = solve_A_update<double>(At, Pt, stats, 10.0 * bound, 1.0,
                                             K, tight_config());
  CHECK(result.solution.norm() == doctest::Approx(0.0));
}

TEST_CASE("transition update agrees with the reference oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto stats = sampled_stats(3, 100 + seed);
    Rng rng(seed);
    const Matrix<double> At = testing::random_stable(3, rng, 0.7);
    const Matrix<double> Pt = testing::random_spd(3, rng);
    for (double lambda : {0.0, 1.0, 10.0}) {
      const auto got =
          solve_A_update<double>(At, Pt, stats, lambda, 1.0, 30, tight_config());
      TransitionObjective<double> objective(At, Pt, stats, lambda, 1.0, 30);
      const auto want = reference_prox_gradient<double>(objective, At, 1e-9);
      CHECK((got.solution - want).norm() <= 1e-5);
      // Within the scheme's numerical fixed-point accuracy of the optimum.
      CHECK(objective.min_subgradient_norm(got.solution) <= 1e-5);
    }
  }
}

TEST_CASE("precision update, scalar stationarity root") {
  const auto result = solve_P_update<double>(
      m1x1(0), m1x1(1), scalar_stats(1, 0, 0), 0.0, 1.0, 2, tight_config());
  // Pi = Psi - 0 = 1; stationarity p - 1/p = 0.
  CHECK(result.solution(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("precision update stays SPD under a strong data term") {
  for (double c : {1.0, 10.0, 100.0}) {
    SmoothingStats<double> stats{c * Matrix<double>::Identity(3, 3),
                                 Matrix<double>::Zero(3, 3),
                                 Matrix<double>::Zero(3, 3)};
    const auto result = solve_P_update<double>(
        Matrix<double>::Zero(3, 3), Matrix<double>::Identity(3, 3), stats, 0.0,
        1.0, 10, tight_config());
    CHECK(is_spd(result.solution));
    // Scalar stationarity per eigenvalue: (K/2)(c - 1/p) + p - 1 = 0.
    const double K = 10.0;
    const auto eig =
        Eigen::SelfAdjointEigenSolver<Matrix<double>>(result.solution)
            .eigenvalues();
    for (Index i = 0; i < 3; ++i) {
      const double p = eig(i);
      CHECK(std::abs(0.5 * K * (c - 1.0 / p) + p - 1.0) <= 1e-5 * (1.0 + c * K));
    }
  }
}

TEST_CASE("precision update agrees with the reference oracle") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    const auto stats = sampled_stats(3, 200 + seed);
    Rng rng(seed);
    const Matrix<double> At = testing::random_stable(3, rng, 0.7);
    const Matrix<double> Pt = testing::random_spd(3, rng);
    for (double lambda : {0.0, 1.0, 10.0}) {
      const auto got =
          solve_P_update<double>(At, Pt, stats, lambda, 1.0, 30, tight_config());
      PrecisionObjective<double> objective(Pt, make_pi(stats, At), lambda, 1.0,
                                           30);
      const auto want = reference_prox_gradient<double>(objective, Pt, 1e-9);
      CHECK((got.solution - want).norm() <= 1e-5);
      CHECK(is_spd(got.solution));
    }
  }
}

TEST_CASE("reference oracle solves the scalar closed forms") {
  TransitionObjective<double> tobj(m1x1(0), m1x1(1), scalar_stats(1, 1, 1), 0.0,
                                   1.0, 2);
  CHECK(reference_prox_gradient<double>(tobj, m1x1(0), 1e-10)(0, 0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-8));

  PrecisionObjective<double> pobj(m1x1(1), PiMatrix<double>{m1x1(1)}, 0.0, 1.0,
                                  2);
  CHECK(reference_prox_gradient<double>(pobj, m1x1(1), 1e-10)(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("strong convexity certificate at the returned solutions") {
  const auto stats = sampled_stats(3, 909);
  Rng rng(99);
  const Matrix<double> At = testing::random_stable(3, rng, 0.5);
  const Matrix<double> Pt = testing::random_spd(3, rng);
  const double theta = 1.0;

  const auto a_res =
      solve_A_update<double>(At, Pt, stats, 1.0, theta, 30, tight_config());
  TransitionObjective<double> tobj(At, Pt, stats, 1.0, theta, 30);
  for (int t = 0; t < 20; ++t) {
    const Matrix<double> d = testing::random_matrix(3, 3, rng, 0.3);
    CHECK(tobj.value(a_res.solution + d) >=
          tobj.value(a_res.solution) + d.squaredNorm() / (2.0 * theta) - 1e-8);
  }

  const auto p_res =
      solve_P_update<double>(At, Pt, stats, 1.0, theta, 30, tight_config());
  PrecisionObjective<double> pobj(Pt, make_pi(stats, At), 1.0, theta, 30);
  for (int t = 0; t < 20; ++t) {
    const Matrix<double> d = symmetrize(testing::random_matrix(3, 3, rng, 0.05));
    const double perturbed = pobj.value(p_res.solution + d);
    if (!std::isfinite(perturbed)) continue;
    CHECK(perturbed >=
          pobj.value(p_res.solution) + d.squaredNorm() / (2.0 * theta) - 1e-8);
  }
}

TEST_CASE("closed-form maximum-likelihood limit at huge proximal stepsize") {
  const auto stats = sampled_stats(3, 4242);
  Rng rng(3);
  const Matrix<double> At = testing::random_stable(3, rng, 0.5);
  const Matrix<double> Pt = testing::random_spd(3, rng);
  const double theta = 1e6;
  InnerConfig cfg = tight_config();
  cfg.xi = 1e-4;  // objective values scale with theta

  const auto a_res = solve_A_update<double>(At, Pt, stats, 0.0, theta, 30, cfg);
  const Matrix<double> a_want =
      stats.Delta * spd_inverse(stats.Phi, "Phi");
  CHECK((a_res.solution - a_want).norm() <= 1e-4 * a_want.norm());

  const auto p_res = solve_P_update<double>(At, Pt, stats, 0.0, theta, 30, cfg);
  const Matrix<double> p_want = spd_inverse(make_pi(stats, At).Pi, "Pi");
  CHECK((p_res.solution - p_want).norm() <= 1e-4 * p_want.norm());
}

TEST_CASE("objective traces are nonincreasing or the fallback engaged") {
  for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
    const auto stats = sampled_stats(3, 300 + seed);
    Rng rng(seed);
    const Matrix<double> At = testing::random_stable(3, rng, 0.6);
    const Matrix<double> Pt = testing::random_spd(3, rng);
    InnerConfig cfg;  // production precision
    for (auto* result :
         {new InnerResult<double>(
              solve_A_update<double>(At, Pt, stats, 2.0, 1.0, 30, cfg)),
          new InnerResult<double>(
              solve_P_update<double>(At, Pt, stats, 2.0, 1.0, 30, cfg))}) {
      if (!result->used_fallback) {
        for (std::size_t i = 1; i + 1 < result->objective_trace.size(); ++i)
          CHECK(result->objective_trace[i + 1] <=
                result->objective_trace[i] + 1e-12);
      }
      CHECK(result->objective_trace.back() <=
            result->objective_trace.front() + 1e-12);
      delete result;
    }
  }
}

TEST_CASE("subgradient certificate holds at production precision") {
  // The contract: when the solver reports convergence at precision xi, some
  // subgradient at the returned solution has norm at most 10 xi.
  InnerConfig cfg;  // xi = 1e-3
  for (std::uint64_t seed : {41u, 42u, 43u}) {
    const auto stats = sampled_stats(3, 400 + seed);
    Rng rng(seed);
    const Matrix<double> At = testing::random_stable(3, rng, 0.6);
    const Matrix<double> Pt = testing::random_spd(3, rng);

    const auto a_res = solve_A_update<double>(At, Pt, stats, 1.0, 1.0, 30, cfg);
    TransitionObjective<double> tobj(At, Pt, stats, 1.0, 1.0, 30);
    CHECK(a_res.converged);
    CHECK(tobj.min_subgradient_norm(a_res.solution) <= 10 * cfg.xi);

    const auto p_res = solve_P_update<double>(At, Pt, stats, 1.0, 1.0, 30, cfg);
    PrecisionObjective<double> pobj(Pt, make_pi(stats, At), 1.0, 1.0, 30);
    CHECK(p_res.converged);
    CHECK(pobj.min_subgradient_norm(p_res.solution) <= 10 * cfg.xi);
  }
}

TEST_CASE("inner config validation") {
  InnerConfig cfg;
  cfg.vartheta = 2.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg.vartheta = 1.0;
  cfg.xi = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
  cfg.xi = 1e-3;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidConfig);
}
