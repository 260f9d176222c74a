#include <doctest.h>

#include <cmath>

#include "dglasso/datagen.hpp"
#include "dglasso/lgssm.hpp"
#include "oracles.hpp"

using namespace dglasso;
using testing::JointGaussianOracle;

namespace {

ModelParams<double> scalar_params(double a, double p, double h, double r,
                                  double mu0, double sigma0) {
  ModelParams<double> params;
  params.A = Matrix<double>::Constant(1, 1, a);
  params.P = Matrix<double>::Constant(1, 1, p);
  params.H = {Matrix<double>::Constant(1, 1, h)};
  params.R = {Matrix<double>::Constant(1, 1, r)};
  params.mu0 = Vector<double>::Constant(1, mu0);
  params.Sigma0 = Matrix<double>::Constant(1, 1, sigma0);
  return params;
}

TimeSeries<double> scalar_series(std::initializer_list<double> ys) {
  TimeSeries<double> s;
  s.observations.resize(static_cast<Index>(ys.size()), 1);
  Index k = 0;
  for (double y : ys) s.observations(k++, 0) = y;
  return s;
}

}  // namespace

TEST_CASE("scalar one-step filter recursion") {
  const auto params = scalar_params(1, 1, 1, 1, 0, 1);
  const auto out = kalman_filter(params, scalar_series({0.0}));

  CHECK(out.predicted[0].cov(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(out.innovation_covs[0](0, 0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(out.gains[0](0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(out.filtered[1].mean(0) == doctest::Approx(0.0));
  CHECK(out.filtered[1].cov(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("zero transition matrix propagates the stationary prior") {
  Rng rng(11);
  ModelParams<double> params = testing::random_params(3, 2, rng);
  params.A.setZero();
  const auto series = testing::random_series(params, 6, rng);
  const auto out = kalman_filter(params, series);
  const Matrix<double> Q = spd_inverse(params.P, "P");
  for (Index k = 0; k < 6; ++k) {
    CHECK(out.predicted[size_t(k)].mean.norm() == doctest::Approx(0.0));
    CHECK((out.predicted[size_t(k)].cov - Q).norm() <= 1e-14 * Q.norm());
  }
}

TEST_CASE("filter matches the batch conditioning oracle") {
  Rng rng(2024);
  const auto params = testing::random_params(2, 2, rng);
  const auto series = testing::random_series(params, 5, rng);
  const auto out = kalman_filter(params, series);
  const JointGaussianOracle oracle(params, series);
  for (Index k = 0; k <= 5; ++k) {
    const auto want = oracle.filtered_marginal(k);
    const auto& got = out.filtered[size_t(k)];
    CHECK((got.mean - want.mean).norm() <=
          1e-8 * std::max(1.0, want.mean.norm()));
    CHECK((got.cov - want.cov).norm() <= 1e-8 * want.cov.norm());
  }
  CHECK(out.neg_loglik ==
        doctest::Approx(oracle.neg_loglik()).epsilon(1e-10));
}

TEST_CASE("smoother initialization matches the filter at the horizon") {
  const auto params = scalar_params(1, 1, 1, 1, 0, 1);
  const auto filt = kalman_filter(params, scalar_series({0.0}));
  const auto smth = rts_smoother(params, filt);
  CHECK(smth.smoothed[1].mean == filt.filtered[1].mean);
  CHECK(smth.smoothed[1].cov == filt.filtered[1].cov);
}

TEST_CASE("rigid dynamics pull every smoothed mean to the final filtered mean") {
  ModelParams<double> params = scalar_params(1, 1e8, 1, 1, 0, 1);
  const auto series = scalar_series({2.0, 2.0, 2.0, 2.0, 2.0, 2.0});
  const auto filt = kalman_filter(params, series);
  const auto smth = rts_smoother(params, filt);
  const double target = filt.filtered[6].mean(0);
  for (Index k = 0; k <= 6; ++k)
    CHECK(smth.smoothed[size_t(k)].mean(0) ==
          doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("smoother matches the batch conditioning oracle") {
  Rng rng(77);
  const auto params = testing::random_params(2, 1, rng);
  const auto series = testing::random_series(params, 5, rng);
  const auto filt = kalman_filter(params, series);
  const auto smth = rts_smoother(params, filt);
  const JointGaussianOracle oracle(params, series);
  for (Index k = 0; k <= 5; ++k) {
    const auto want = oracle.smoothed_marginal(k);
    const auto& got = smth.smoothed[size_t(k)];
    CHECK((got.mean - want.mean).norm() <=
          1e-8 * std::max(1.0, want.mean.norm()));
    CHECK((got.cov - want.cov).norm() <= 1e-8 * want.cov.norm());
  }
  // Exact agreement at the horizon, not just within tolerance.
  CHECK(smth.smoothed[5].mean == filt.filtered[5].mean);
  CHECK(smth.smoothed[5].cov == filt.filtered[5].cov);
}

TEST_CASE("one-step marginal likelihood closed form") {
  const auto params = scalar_params(1, 1, 1, 1, 0, 1);
  const double nll = marginal_negloglik(params, scalar_series({0.0}));
  CHECK(nll == doctest::Approx(0.5 * std::log(6.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("marginal likelihood is a pure function of its inputs") {
  Rng rng(5);
  const auto params = testing::random_params(3, 3, rng);
  const auto series = testing::random_series(params, 8, rng);
  const TimeSeries<double> copy = series;
  CHECK(marginal_negloglik(params, series) ==
        marginal_negloglik(params, copy));
}

TEST_CASE("perturbing the true transition increases the loss on every trial") {
  for (int trial = 0; trial < 20; ++trial) {
    DatasetSpec spec;
    spec.K = 200;
    spec.seed = 9000 + std::uint64_t(trial);
    auto [gt, train, test] = make_dataset<double>(spec);
    const auto fixed = fixed_params<double>(spec);
    const double at_truth =
        marginal_negloglik(fixed.bind(gt.A_star, gt.P_star), train);
    Matrix<double> perturbed = gt.A_star;
    perturbed(0, 1) += 0.5;
    const double off_truth =
        marginal_negloglik(fixed.bind(perturbed, gt.P_star), train);
    CHECK(off_truth > at_truth);
  }
}

TEST_CASE("likelihood recomposes from stored innovations") {
  Rng rng(31);
  const auto params = testing::random_params(3, 2, rng);
  const auto series = testing::random_series(params, 12, rng);
  const auto out = kalman_filter(params, series);
  constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
  double recomputed = 0.0;
  for (std::size_t k = 0; k < out.innovations.size(); ++k) {
    const Eigen::LLT<Matrix<double>> llt(out.innovation_covs[k]);
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    recomputed += 0.5 * (2.0 * kLog2Pi + logdet) +
                  0.5 * out.innovations[k].dot(llt.solve(out.innovations[k]));
  }
  CHECK(std::abs(recomputed - out.neg_loglik) <= 1e-10 * std::abs(out.neg_loglik));
}

TEST_CASE("returned covariances are exactly symmetric") {
  Rng rng(13);
  const auto params = testing::random_params(4, 2, rng);
  const auto series = testing::random_series(params, 10, rng);
  const auto filt = kalman_filter(params, series);
  const auto smth = rts_smoother(params, filt);
  for (const auto& b : filt.filtered)
    CHECK((b.cov - b.cov.transpose()).norm() <= 1e-12 * b.cov.norm());
  for (const auto& b : filt.predicted)
    CHECK((b.cov - b.cov.transpose()).norm() <= 1e-12 * b.cov.norm());
  for (const auto& b : smth.smoothed)
    CHECK((b.cov - b.cov.transpose()).norm() <= 1e-12 * b.cov.norm());
}

TEST_CASE("smoothing stats in the deterministic limit") {
  // Near-deterministic chain visiting x0 = 2, x1 = 3: tiny prior and
  // observation noise pin the smoothed means, covariances vanish.
  ModelParams<double> params = scalar_params(1.5, 1e10, 1, 1e-10, 2, 1e-10);
  const auto series = scalar_series({3.0});
  const auto stats = smoothing_stats(params, series);
  CHECK(stats.Psi(0, 0) == doctest::Approx(9.0).epsilon(1e-4));
  CHECK(stats.Delta(0, 0) == doctest::Approx(6.0).epsilon(1e-4));
  CHECK(stats.Phi(0, 0) == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("index bookkeeping between Psi and Phi") {
  Rng rng(71);
  const auto params = testing::random_params(3, 2, rng);
  const auto series = testing::random_series(params, 9, rng);
  const auto stats = smoothing_stats(params, series);
  const auto filt = kalman_filter(params, series);
  const auto smth = rts_smoother(params, filt);
  const Index K = series.length();
  const auto term = [&](Index k) -> Matrix<double> {
    const auto& b = smth.smoothed[size_t(k)];
    return b.cov + b.mean * b.mean.transpose();
  };
  // K Psi - K Phi telescopes to the boundary terms.
  const Matrix<double> lhs = double(K) * (stats.Psi - stats.Phi);
  const Matrix<double> rhs = symmetrize(term(K)) - symmetrize(term(0));
  CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
}

TEST_CASE("smoothing stats match the batch oracle with exact lag-one moments") {
  Rng rng(123);
  const auto params = testing::random_params(2, 2, rng);
  const auto series = testing::random_series(params, 6, rng);
  const auto stats = smoothing_stats(params, series);
  const JointGaussianOracle oracle(params, series);

  const Index K = series.length();
  const Index nx = params.state_dim();
  Matrix<double> psi = Matrix<double>::Zero(nx, nx);
  Matrix<double> delta = Matrix<double>::Zero(nx, nx);
  Matrix<double> phi = Matrix<double>::Zero(nx, nx);
  for (Index k = 1; k <= K; ++k) {
    const auto cur = oracle.smoothed_marginal(k);
    const auto prev = oracle.smoothed_marginal(k - 1);
    psi += cur.cov + cur.mean * cur.mean.transpose();
    delta += oracle.smoothed_lag_one_moment(k);
    phi += prev.cov + prev.mean * prev.mean.transpose();
  }
  psi /= double(K);
  delta /= double(K);
  phi /= double(K);
  CHECK((stats.Psi - psi).norm() <= 1e-8 * psi.norm());
  CHECK((stats.Delta - delta).norm() <= 1e-8 * delta.norm());
  CHECK((stats.Phi - phi).norm() <= 1e-8 * phi.norm());
}

TEST_CASE("core pipeline instantiates for single precision") {
  ModelParams<float> params;
  params.A = Matrix<float>::Constant(1, 1, 0.5f);
  params.P = Matrix<float>::Constant(1, 1, 1.0f);
  params.H = {Matrix<float>::Identity(1, 1)};
  params.R = {Matrix<float>::Identity(1, 1)};
  params.mu0 = Vector<float>::Zero(1);
  params.Sigma0 = Matrix<float>::Identity(1, 1);
  TimeSeries<float> series;
  series.observations = Matrix<float>::Constant(3, 1, 1.0f);
  const auto filt = kalman_filter(params, series);
  const auto smth = rts_smoother(params, filt);
  const auto stats = smoothing_stats(params, series);
  CHECK(std::isfinite(filt.neg_loglik));
  CHECK(std::isfinite(stats.Psi(0, 0)));
  CHECK(smth.smoothed.size() == 4);
}

TEST_CASE("validation rejects broken parameters") {
  auto params = scalar_params(1, 1, 1, 1, 0, 1);
  params.P(0, 0) = -1.0;
  CHECK_THROWS_AS(kalman_filter(params, scalar_series({0.0})), NonSpd);

  auto bad_dim = scalar_params(1, 1, 1, 1, 0, 1);
  bad_dim.H = {Matrix<double>::Ones(2, 2)};
  bad_dim.R = {Matrix<double>::Identity(2, 2)};
  CHECK_THROWS_AS(kalman_filter(bad_dim, scalar_series({0.0})),
                  DimensionMismatch);
}
