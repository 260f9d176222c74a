#ifndef DGLASSO_LGSSM_HPP
#define DGLASSO_LGSSM_HPP

#include <optional>
#include <string>
#include <vector>

#include "dglasso/core.hpp"

namespace dglasso {

/// Parameters of the linear-Gaussian state-space model
///
///   x_k = A x_{k-1} + q_k,   q_k ~ N(0, P^{-1})
///   y_k = H_k x_k + r_k,     r_k ~ N(0, R_k)
///   x_0 ~ N(mu0, Sigma0)
///
/// The state noise is parameterized by its precision matrix P. H and R may
/// hold a single entry (constant over time) or one entry per step.
template <typename Scalar>
struct ModelParams {
  Matrix<Scalar> A;                // Nx x Nx transition
  Matrix<Scalar> P;                // Nx x Nx state-noise precision, SPD
  std::vector<Matrix<Scalar>> H;   // Ny x Nx observation maps (1 or K)
  std::vector<Matrix<Scalar>> R;   // Ny x Ny observation-noise covs (1 or K)
  Vector<Scalar> mu0;              // prior mean
  Matrix<Scalar> Sigma0;           // prior covariance, SPD

  Index state_dim() const { return A.rows(); }
  Index obs_dim() const { return H.empty() ? 0 : H.front().rows(); }

  const Matrix<Scalar>& H_at(Index k) const {
    return H.size() == 1 ? H.front() : H[static_cast<std::size_t>(k)];
  }
  const Matrix<Scalar>& R_at(Index k) const {
    return R.size() == 1 ? R.front() : R[static_cast<std::size_t>(k)];
  }

  void validate(Index K) const {
    const Index nx = state_dim();
    if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
    if (P.rows() != nx || P.cols() != nx)
      throw DimensionMismatch("P must be Nx x Nx");
    if (asymmetry(P) > Scalar(1e-12))
      throw SymmetryViolation("P is not symmetric");
    if (!is_spd(P)) throw NonSpd("P is not positive definite");
    if (mu0.size() != nx) throw DimensionMismatch("mu0 has wrong size");
    if (Sigma0.rows() != nx || Sigma0.cols() != nx)
      throw DimensionMismatch("Sigma0 must be Nx x Nx");
    if (!is_spd(Sigma0)) throw NonSpd("Sigma0 is not positive definite");
    if (H.empty() || R.empty()) throw DimensionMismatch("H and R must be set");
    if (H.size() != 1 && static_cast<Index>(H.size()) != K)
      throw DimensionMismatch("H must have 1 or K entries");
    if (R.size() != 1 && static_cast<Index>(R.size()) != K)
      throw DimensionMismatch("R must have 1 or K entries");
    const Index ny = obs_dim();
    for (const auto& h : H)
      if (h.rows() != ny || h.cols() != nx)
        throw DimensionMismatch("H_k must be Ny x Nx");
    for (const auto& r : R) {
      if (r.rows() != ny || r.cols() != ny)
        throw DimensionMismatch("R_k must be Ny x Ny");
      if (!is_spd(r)) throw NonSpd("R_k is not positive definite");
    }
  }
};

/// An observed record y_{1:K}, optionally with the simulated states x_{0:K}.
template <typename Scalar>
struct TimeSeries {
  Matrix<Scalar> observations;              // K x Ny, row k-1 holds y_k
  std::optional<Matrix<Scalar>> states;     // (K+1) x Nx, row k holds x_k

  Index length() const { return observations.rows(); }
  Vector<Scalar> y(Index k) const { return observations.row(k - 1); }  // 1-based
};

/// Mean and covariance of one Gaussian state marginal.
template <typename Scalar>
struct GaussianBelief {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
};

/// Forward pass output. Index 0 of `filtered` is the prior belief; entry k is
/// p(x_k | y_{1:k}). `predicted[k-1]` is p(x_k | y_{1:k-1}) and the innovation
/// arrays are likewise shifted so slot k-1 describes step k.
template <typename Scalar>
struct FilterOutput {
  std::vector<GaussianBelief<Scalar>> filtered;   // K+1 entries
  std::vector<GaussianBelief<Scalar>> predicted;  // K entries
  std::vector<Vector<Scalar>> innovations;        // v_k = y_k - nu_k
  std::vector<Vector<Scalar>> innovation_means;   // nu_k
  std::vector<Matrix<Scalar>> innovation_covs;    // S_k, SPD
  std::vector<Matrix<Scalar>> gains;              // K_k
  Scalar neg_loglik = Scalar(0);
};

/// Backward pass output; `smoothed[k]` is p(x_k | y_{1:K}) and `gains[k]` the
/// smoother gain G_k (defined for k = 0..K, the last one extrapolated).
template <typename Scalar>
struct SmootherOutput {
  std::vector<GaussianBelief<Scalar>> smoothed;   // K+1 entries
  std::vector<Matrix<Scalar>> gains;              // K+1 entries
};

/// Second moments of the smoothing distribution that define the quadratic
/// surrogate of the likelihood: Psi ~ E[x_k x_k^T], Delta ~ E[x_k x_{k-1}^T],
/// Phi ~ E[x_{k-1} x_{k-1}^T], each averaged over k = 1..K.
template <typename Scalar>
struct SmoothingStats {
  Matrix<Scalar> Psi;
  Matrix<Scalar> Delta;
  Matrix<Scalar> Phi;
};

/// Kalman filter.
///
/// Runs the standard predict/update recursion with Q = P^{-1} formed once by
/// Cholesky inversion. Covariances are symmetrized after every update so the
/// downstream factorizations stay viable. The accumulated negative
/// log-likelihood is
///
///   sum_k 1/2 log det(2 pi S_k) + 1/2 v_k^T S_k^{-1} v_k.
template <typename Scalar>
FilterOutput<Scalar> kalman_filter(const ModelParams<Scalar>& params,
                                   const TimeSeries<Scalar>& series) {
  const Index K = series.length();
  if (K < 1) throw DimensionMismatch("series must contain at least one step");
  params.validate(K);
  if (series.observations.cols() != params.obs_dim())
    throw DimensionMismatch("observation dimension does not match H");

  const Index ny = params.obs_dim();
  const Matrix<Scalar> Q = spd_inverse(params.P, "P");
  constexpr Scalar kLog2Pi = Scalar(1.8378770664093454835606594728112353);

  FilterOutput<Scalar> out;
  out.filtered.reserve(static_cast<std::size_t>(K) + 1);
  out.predicted.reserve(static_cast<std::size_t>(K));
  out.innovations.reserve(static_cast<std::size_t>(K));
  out.innovation_means.reserve(static_cast<std::size_t>(K));
  out.innovation_covs.reserve(static_cast<std::size_t>(K));
  out.gains.reserve(static_cast<std::size_t>(K));

  out.filtered.push_back({params.mu0, symmetrize(params.Sigma0)});

  Vector<Scalar> mean = params.mu0;
  Matrix<Scalar> cov = symmetrize(params.Sigma0);
  for (Index k = 1; k <= K; ++k) {
    // Prediction / propagation.
    Vector<Scalar> mean_pred = params.A * mean;
    Matrix<Scalar> cov_pred =
        symmetrize(params.A * cov * params.A.transpose() + Q);

    // Update.
    const Matrix<Scalar>& Hk = params.H_at(k - 1);
    const Matrix<Scalar>& Rk = params.R_at(k - 1);
    Vector<Scalar> nu = Hk * mean_pred;
    Vector<Scalar> v = series.observations.row(k - 1).transpose() - nu;
    Matrix<Scalar> S = symmetrize(Hk * cov_pred * Hk.transpose() + Rk);
    Eigen::LLT<Matrix<Scalar>> llt_S(S);
    if (llt_S.info() != Eigen::Success)
      throw NonSpd("innovation covariance S_k is not positive definite at k=" +
                   std::to_string(k));
    Matrix<Scalar> gain = llt_S.solve(Hk * cov_pred).transpose();
    mean = mean_pred + gain * v;
    cov = symmetrize(cov_pred - gain * S * gain.transpose());

    const Scalar logdet_S =
        Scalar(2) * llt_S.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Scalar maha = v.dot(llt_S.solve(v));
    out.neg_loglik +=
        Scalar(0.5) * (Scalar(ny) * kLog2Pi + logdet_S) + Scalar(0.5) * maha;

    out.predicted.push_back({std::move(mean_pred), std::move(cov_pred)});
    out.innovation_means.push_back(std::move(nu));
    out.innovations.push_back(std::move(v));
    out.innovation_covs.push_back(std::move(S));
    out.gains.push_back(std::move(gain));
    out.filtered.push_back({mean, cov});
  }
  return out;
}

/// Rauch-Tung-Striebel smoother, consuming a filter pass made under the same
/// parameters. The recursion on the filtered moments is
///
///   G_k       = Sigma_k A^T (Sigma_{k+1|k})^{-1}
///   mu_k^s    = mu_k    + G_k (mu_{k+1}^s    - mu_{k+1|k})
///   Sigma_k^s = Sigma_k + G_k (Sigma_{k+1}^s - Sigma_{k+1|k}) G_k^T
///
/// initialized at the last filtered belief. gains[K] uses the one-step
/// prediction past the horizon so every index k = 0..K carries a gain.
template <typename Scalar>
SmootherOutput<Scalar> rts_smoother(const ModelParams<Scalar>& params,
                                    const FilterOutput<Scalar>& filt) {
  const Index K = static_cast<Index>(filt.predicted.size());
  if (filt.filtered.size() != static_cast<std::size_t>(K) + 1)
    throw DimensionMismatch("filter output is inconsistent");
  const Matrix<Scalar> Q = spd_inverse(params.P, "P");

  SmootherOutput<Scalar> out;
  out.smoothed.assign(static_cast<std::size_t>(K) + 1, GaussianBelief<Scalar>{});
  out.gains.assign(static_cast<std::size_t>(K) + 1, Matrix<Scalar>());
  out.smoothed[static_cast<std::size_t>(K)] = filt.filtered[static_cast<std::size_t>(K)];

  // Gain past the horizon, from the extrapolated prediction at K+1.
  {
    const Matrix<Scalar>& covK = filt.filtered[static_cast<std::size_t>(K)].cov;
    Matrix<Scalar> pred_next =
        symmetrize(params.A * covK * params.A.transpose() + Q);
    Eigen::LLT<Matrix<Scalar>> llt(pred_next);
    if (llt.info() != Eigen::Success)
      throw NonSpd("predicted covariance past the horizon is singular");
    out.gains[static_cast<std::size_t>(K)] =
        llt.solve(params.A * covK).transpose();
  }

  for (Index k = K - 1; k >= 0; --k) {
    const auto& f = filt.filtered[static_cast<std::size_t>(k)];
    const auto& pred = filt.predicted[static_cast<std::size_t>(k)];  // step k+1
    Eigen::LLT<Matrix<Scalar>> llt(pred.cov);
    if (llt.info() != Eigen::Success)
      throw NonSpd("predicted covariance is singular at k=" + std::to_string(k + 1));
    Matrix<Scalar> G = llt.solve(params.A * f.cov).transpose();  // Nx x Nx

    const auto& next = out.smoothed[static_cast<std::size_t>(k) + 1];
    out.smoothed[static_cast<std::size_t>(k)].mean =
        f.mean + G * (next.mean - pred.mean);
    out.smoothed[static_cast<std::size_t>(k)].cov =
        symmetrize(f.cov + G * (next.cov - pred.cov) * G.transpose());
    out.gains[static_cast<std::size_t>(k)] = std::move(G);
  }
  return out;
}

/// Marginal negative log-likelihood of y_{1:K} under `params`.
template <typename Scalar>
Scalar marginal_negloglik(const ModelParams<Scalar>& params,
                          const TimeSeries<Scalar>& series) {
  return kalman_filter(params, series).neg_loglik;
}

/// Smoothing statistics (Psi, Delta, Phi) at the tangent point `params`.
///
/// Runs the filter and smoother at (A, P) and averages
///   Psi   = 1/K sum_k Sigma_k^s + mu_k^s mu_k^s^T
///   Delta = 1/K sum_k Sigma_k^s G_{k-1}^T + mu_k^s mu_{k-1}^s^T
///   Phi   = 1/K sum_k Sigma_{k-1}^s + mu_{k-1}^s mu_{k-1}^s^T
/// Psi and Phi are symmetrized before return; the lag-one cross term in Delta
/// uses the closed form Sigma_k^s G_{k-1}^T, no separate recursion.
template <typename Scalar>
SmoothingStats<Scalar> smoothing_stats(const ModelParams<Scalar>& params,
                                       const TimeSeries<Scalar>& series) {
  const FilterOutput<Scalar> filt = kalman_filter(params, series);
  const SmootherOutput<Scalar> smth = rts_smoother(params, filt);
  const Index K = series.length();
  const Index nx = params.state_dim();

  Matrix<Scalar> psi = Matrix<Scalar>::Zero(nx, nx);
  Matrix<Scalar> delta = Matrix<Scalar>::Zero(nx, nx);
  Matrix<Scalar> phi = Matrix<Scalar>::Zero(nx, nx);
  for (Index k = 1; k <= K; ++k) {
    const auto& cur = smth.smoothed[static_cast<std::size_t>(k)];
    const auto& prev = smth.smoothed[static_cast<std::size_t>(k) - 1];
    const auto& G_prev = smth.gains[static_cast<std::size_t>(k) - 1];
    psi += cur.cov + cur.mean * cur.mean.transpose();
    delta += cur.cov * G_prev.transpose() + cur.mean * prev.mean.transpose();
    phi += prev.cov + prev.mean * prev.mean.transpose();
  }
  const Scalar inv_k = Scalar(1) / Scalar(K);
  SmoothingStats<Scalar> stats;
  stats.Psi = symmetrize(psi * inv_k);
  stats.Delta = delta * inv_k;
  stats.Phi = symmetrize(phi * inv_k);
  return stats;
}

}  // namespace dglasso

#endif  // DGLASSO_LGSSM_HPP
