// Test-only oracles, independent of the recursive implementations they check.
#ifndef DGLASSO_TESTS_ORACLES_HPP
#define DGLASSO_TESTS_ORACLES_HPP

#include <vector>

#include "dglasso/lgssm.hpp"
#include "dglasso/rng.hpp"

namespace dglasso::testing {

// Batch conditioning oracle: forms the exact joint Gaussian over the stacked
// states x_{0:K} and observations y_{1:K}, then conditions by dense linear
// algebra. Everything the filter/smoother computes recursively is read off
// the conditioned joint, including lag-one cross covariances.
class JointGaussianOracle {
 public:
  JointGaussianOracle(const ModelParams<double>& params,
                      const TimeSeries<double>& series)
      : nx_(params.state_dim()), ny_(params.obs_dim()), K_(series.length()) {
    const Matrix<double> Q = spd_inverse(params.P, "P");
    const Index n_states = (K_ + 1) * nx_;

    mean_x_ = Vector<double>::Zero(n_states);
    mean_x_.head(nx_) = params.mu0;
    for (Index k = 1; k <= K_; ++k)
      mean_x_.segment(k * nx_, nx_) = params.A * mean_x_.segment((k - 1) * nx_, nx_);

    cov_x_ = Matrix<double>::Zero(n_states, n_states);
    cov_x_.topLeftCorner(nx_, nx_) = params.Sigma0;
    for (Index k = 1; k <= K_; ++k) {
      const Matrix<double> prev = cov_x_.block((k - 1) * nx_, (k - 1) * nx_, nx_, nx_);
      cov_x_.block(k * nx_, k * nx_, nx_, nx_) =
          params.A * prev * params.A.transpose() + Q;
      for (Index j = 0; j < k; ++j) {
        const Matrix<double> cross = cov_x_.block(j * nx_, (k - 1) * nx_, nx_, nx_);
        cov_x_.block(j * nx_, k * nx_, nx_, nx_) = cross * params.A.transpose();
        cov_x_.block(k * nx_, j * nx_, nx_, nx_) =
            cov_x_.block(j * nx_, k * nx_, nx_, nx_).transpose();
      }
    }

    Matrix<double> obs_map = Matrix<double>::Zero(K_ * ny_, n_states);
    Matrix<double> obs_noise = Matrix<double>::Zero(K_ * ny_, K_ * ny_);
    for (Index k = 1; k <= K_; ++k) {
      obs_map.block((k - 1) * ny_, k * nx_, ny_, nx_) = params.H_at(k - 1);
      obs_noise.block((k - 1) * ny_, (k - 1) * ny_, ny_, ny_) = params.R_at(k - 1);
    }
    mean_y_ = obs_map * mean_x_;
    cov_xy_ = cov_x_ * obs_map.transpose();
    cov_y_ = obs_map * cov_xy_ + obs_noise;

    y_ = Vector<double>::Zero(K_ * ny_);
    for (Index k = 0; k < K_; ++k)
      y_.segment(k * ny_, ny_) = series.observations.row(k).transpose();
  }

  // Posterior over all states given the first n_obs observations.
  void condition(Index n_obs, Vector<double>& mean, Matrix<double>& cov) const {
    const Index m = n_obs * ny_;
    if (m == 0) {
      mean = mean_x_;
      cov = cov_x_;
      return;
    }
    const Matrix<double> Syy = cov_y_.topLeftCorner(m, m);
    const Matrix<double> Sxy = cov_xy_.leftCols(m);
    const Eigen::LDLT<Matrix<double>> ldlt(Syy);
    const Vector<double> resid = y_.head(m) - mean_y_.head(m);
    mean = mean_x_ + Sxy * ldlt.solve(resid);
    cov = cov_x_ - Sxy * ldlt.solve(Sxy.transpose());
  }

  GaussianBelief<double> filtered_marginal(Index k) const {
    Vector<double> mean;
    Matrix<double> cov;
    condition(k, mean, cov);
    return {mean.segment(k * nx_, nx_), cov.block(k * nx_, k * nx_, nx_, nx_)};
  }

  GaussianBelief<double> smoothed_marginal(Index k) const {
    Vector<double> mean;
    Matrix<double> cov;
    condition(K_, mean, cov);
    return {mean.segment(k * nx_, nx_), cov.block(k * nx_, k * nx_, nx_, nx_)};
  }

  // E[x_k x_{k-1}^T | y_{1:K}], exact from the smoothed joint.
  Matrix<double> smoothed_lag_one_moment(Index k) const {
    Vector<double> mean;
    Matrix<double> cov;
    condition(K_, mean, cov);
    return cov.block(k * nx_, (k - 1) * nx_, nx_, nx_) +
           mean.segment(k * nx_, nx_) *
               mean.segment((k - 1) * nx_, nx_).transpose();
  }

  double neg_loglik() const {
    constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
    const Eigen::LLT<Matrix<double>> llt(cov_y_);
    const Vector<double> resid = y_ - mean_y_;
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return 0.5 * (double(K_ * ny_) * kLog2Pi + logdet) +
           0.5 * resid.dot(llt.solve(resid));
  }

  Index horizon() const { return K_; }

 private:
  Index nx_, ny_, K_;
  Vector<double> mean_x_, mean_y_, y_;
  Matrix<double> cov_x_, cov_xy_, cov_y_;
};

inline Matrix<double> random_matrix(Index rows, Index cols, Rng& rng,
                                    double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
  return m;
}

inline Matrix<double> random_spd(Index n, Rng& rng, double ridge = 0.5) {
  const Matrix<double> m = random_matrix(n, n, rng);
  return symmetrize(Matrix<double>(m * m.transpose() / double(n))) +
         ridge * Matrix<double>::Identity(n, n);
}

inline Matrix<double> random_stable(Index n, Rng& rng, double radius = 0.9) {
  Matrix<double> a = random_matrix(n, n, rng);
  const double norm = a.operatorNorm();
  if (norm > 0.0) a *= radius / norm;
  return a;
}

inline ModelParams<double> random_params(Index nx, Index ny, Rng& rng) {
  ModelParams<double> p;
  p.A = random_stable(nx, rng);
  p.P = random_spd(nx, rng);
  p.H = {random_matrix(ny, nx, rng)};
  p.R = {random_spd(ny, rng)};
  p.mu0 = random_matrix(nx, 1, rng);
  p.Sigma0 = random_spd(nx, rng);
  return p;
}

inline TimeSeries<double> random_series(const ModelParams<double>& params,
                                        Index K, Rng& rng) {
  TimeSeries<double> s;
  s.observations = random_matrix(K, params.obs_dim(), rng);
  return s;
}

}  // namespace dglasso::testing

#endif  // DGLASSO_TESTS_ORACLES_HPP
