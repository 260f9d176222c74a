#ifndef DGLASSO_DATAGEN_HPP
#define DGLASSO_DATAGEN_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

#include "dglasso/core.hpp"
#include "dglasso/lgssm.hpp"
#include "dglasso/rng.hpp"
#include "dglasso/solver.hpp"

namespace dglasso {

/// Recipe for one synthetic ground-truth model and its simulated record.
struct DatasetSpec {
  int Nx = 9;
  std::vector<int> block_sizes = {3, 3, 3};
  double cond_log10 = 0.1;       // log10 of the per-block condition number
  double spectral_cap = 0.99;
  int K = 1000;
  double sigma_R = 0.1;          // R = sigma_R^2 Id
  double sigma_0 = 1e-4;         // Sigma0 = sigma_0^2 Id
  std::optional<int> sparsity_keep;  // retained entries of A* inside blocks
  std::uint64_t seed = 0;

  void validate() const {
    if (Nx < 1) throw InvalidConfig("Nx must be positive");
    int sum = 0;
    for (int b : block_sizes) {
      if (b < 1) throw InvalidConfig("block sizes must be positive");
      sum += b;
    }
    if (sum != Nx) throw InvalidConfig("block sizes must sum to Nx");
    if (!(cond_log10 >= 0.0)) throw InvalidConfig("cond_log10 must be >= 0");
    if (!(spectral_cap > 0.0 && spectral_cap <= 1.0))
      throw InvalidConfig("spectral_cap must lie in (0,1]");
    if (K < 1) throw InvalidConfig("K must be positive");
    if (!(sigma_R > 0.0) || !(sigma_0 > 0.0))
      throw InvalidConfig("sigma_R and sigma_0 must be positive");
    if (sparsity_keep && *sparsity_keep < 0)
      throw InvalidConfig("sparsity_keep must be nonnegative");
  }
};

/// Preset A..D: Nx = Ny = 9, three blocks of three, K = 1000,
/// (sigma_R, sigma_0) = (1e-1, 1e-4), conditioning 10^{0.1,0.2,0.5,1}.
inline DatasetSpec preset_spec(char name, std::uint64_t seed) {
  DatasetSpec spec;
  spec.seed = seed;
  switch (name) {
    case 'A': spec.cond_log10 = 0.1; break;
    case 'B': spec.cond_log10 = 0.2; break;
    case 'C': spec.cond_log10 = 0.5; break;
    case 'D': spec.cond_log10 = 1.0; break;
    default: throw InvalidConfig(std::string("unknown preset '") + name + "'");
  }
  return spec;
}

template <typename Scalar>
struct GroundTruth {
  Matrix<Scalar> A_star;
  Matrix<Scalar> P_star;
  Matrix<Scalar> Q_star;  // P_star^{-1}
  DatasetSpec spec;
};

/// Block-diagonal AR(1)-style transition matrix. Per block j,
/// B_j(n, l) = rho_j^{|sigma_j(n) - l|} with rho_j ~ U[0,1] and sigma_j a
/// random permutation (0^0 = 1 on the diagonal when rho_j = 0). Optionally
/// keeps only the `sparsity_keep` largest-magnitude in-block entries, then
/// clips the singular values at `spectral_cap`.
///
/// Draw order per block: rho first, then the permutation (Fisher-Yates);
/// blocks are processed in order. This pins seed-for-seed reproducibility of
/// the generator itself, not of any external run.
template <typename Scalar>
Matrix<Scalar> gen_transition(const DatasetSpec& spec, Rng& rng) {
  spec.validate();
  Matrix<Scalar> A = Matrix<Scalar>::Zero(spec.Nx, spec.Nx);
  Index offset = 0;
  for (int b : spec.block_sizes) {
    const double rho = rng.uniform();
    std::vector<Index> perm(static_cast<std::size_t>(b));
    std::iota(perm.begin(), perm.end(), Index(0));
    for (Index i = b - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(
                    rng.below(static_cast<std::uint64_t>(i) + 1))]);
    for (Index n = 0; n < b; ++n)
      for (Index l = 0; l < b; ++l)
        A(offset + n, offset + l) = static_cast<Scalar>(
            std::pow(rho, std::abs(double(perm[static_cast<std::size_t>(n)]) -
                                   double(l))));
    offset += b;
  }
  if (spec.sparsity_keep) {
    // Keep the largest |entries| within the block support, zero the rest.
    std::vector<std::pair<Scalar, Index>> mag;
    for (Index j = 0; j < A.cols(); ++j)
      for (Index i = 0; i < A.rows(); ++i)
        if (A(i, j) != Scalar(0))
          mag.push_back({std::abs(A(i, j)), i + j * A.rows()});
    std::sort(mag.begin(), mag.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    Matrix<Scalar> kept = Matrix<Scalar>::Zero(A.rows(), A.cols());
    const std::size_t keep = std::min<std::size_t>(
        mag.size(), static_cast<std::size_t>(*spec.sparsity_keep));
    for (std::size_t r = 0; r < keep; ++r) {
      const Index idx = mag[r].second;
      kept(idx % A.rows(), idx / A.rows()) = A(idx % A.rows(), idx / A.rows());
    }
    A = std::move(kept);
  }
  return spectral_cap<Scalar>(A, static_cast<Scalar>(spec.spectral_cap));
}

/// Block-diagonal SPD precision matrix with controlled conditioning. Per
/// block of size n, Omega = H Diag(c^{(i)/2})_{i=0..n-1} H with the
/// Householder reflector H = Id - 2 p p^T / ||p||^2, p ~ U[-1,1]^n (resampled
/// while ||p|| < 1e-12). The reflector is orthogonal, so each block's
/// condition number is exactly c^{(n-1)/2}.
template <typename Scalar>
Matrix<Scalar> gen_precision(const DatasetSpec& spec, Rng& rng) {
  spec.validate();
  const double c = std::pow(10.0, spec.cond_log10);
  Matrix<Scalar> P = Matrix<Scalar>::Zero(spec.Nx, spec.Nx);
  Index offset = 0;
  for (int b : spec.block_sizes) {
    Vector<Scalar> p(b);
    double norm_sq = 0.0;
    do {
      for (Index i = 0; i < b; ++i) p(i) = static_cast<Scalar>(rng.uniform(-1.0, 1.0));
      norm_sq = static_cast<double>(p.squaredNorm());
    } while (std::sqrt(norm_sq) < 1e-12);
    Matrix<Scalar> H = Matrix<Scalar>::Identity(b, b) -
                       Scalar(2) / static_cast<Scalar>(norm_sq) * (p * p.transpose());
    Vector<Scalar> d(b);
    for (Index i = 0; i < b; ++i)
      d(i) = static_cast<Scalar>(std::pow(c, double(i) / 2.0));
    P.block(offset, offset, b, b) = symmetrize(H * d.asDiagonal() * H);
    offset += b;
  }
  return P;
}

/// Ground-truth maker: transition then precision from one generator stream.
template <typename Scalar>
GroundTruth<Scalar> make_ground_truth(const DatasetSpec& spec, Rng& rng) {
  GroundTruth<Scalar> gt;
  gt.spec = spec;
  gt.A_star = gen_transition<Scalar>(spec, rng);
  gt.P_star = gen_precision<Scalar>(spec, rng);
  gt.Q_star = spd_inverse(gt.P_star, "P_star");
  return gt;
}

/// The known part of the presets: H = Id, R = sigma_R^2 Id, mu0 = ones,
/// Sigma0 = sigma_0^2 Id.
template <typename Scalar>
FixedParams<Scalar> fixed_params(const DatasetSpec& spec) {
  FixedParams<Scalar> fixed;
  fixed.H = {Matrix<Scalar>::Identity(spec.Nx, spec.Nx)};
  fixed.R = {static_cast<Scalar>(spec.sigma_R * spec.sigma_R) *
             Matrix<Scalar>::Identity(spec.Nx, spec.Nx)};
  fixed.mu0 = Vector<Scalar>::Ones(spec.Nx);
  fixed.Sigma0 = static_cast<Scalar>(spec.sigma_0 * spec.sigma_0) *
                 Matrix<Scalar>::Identity(spec.Nx, spec.Nx);
  return fixed;
}

/// Draw one record from the model: x_0 ~ N(mu0, Sigma0), then
/// x_k = A* x_{k-1} + q_k with q_k ~ N(0, Q*) and y_k = H_k x_k + r_k.
/// States and observations are both returned.
template <typename Scalar>
TimeSeries<Scalar> simulate(const GroundTruth<Scalar>& gt,
                            const FixedParams<Scalar>& fixed, Index K,
                            Rng& rng) {
  const Index nx = gt.A_star.rows();
  Eigen::LLT<Matrix<Scalar>> llt_q(gt.Q_star);
  Eigen::LLT<Matrix<Scalar>> llt_0(fixed.Sigma0);
  if (llt_q.info() != Eigen::Success || llt_0.info() != Eigen::Success)
    throw NonSpd("simulate: Q_star or Sigma0 is not positive definite");
  const Matrix<Scalar> Lq = llt_q.matrixL();
  const Matrix<Scalar> L0 = llt_0.matrixL();

  auto draw = [&rng](Index n) {
    Vector<Scalar> z(n);
    for (Index i = 0; i < n; ++i) z(i) = static_cast<Scalar>(rng.normal());
    return z;
  };

  TimeSeries<Scalar> series;
  Matrix<Scalar> states(K + 1, nx);
  Vector<Scalar> x = fixed.mu0 + L0 * draw(nx);
  states.row(0) = x.transpose();

  const Index ny = fixed.H.front().rows();
  series.observations.resize(K, ny);
  for (Index k = 1; k <= K; ++k) {
    x = gt.A_star * x + Lq * draw(nx);
    states.row(k) = x.transpose();
    const Matrix<Scalar>& Hk =
        fixed.H.size() == 1 ? fixed.H.front() : fixed.H[static_cast<std::size_t>(k - 1)];
    const Matrix<Scalar>& Rk =
        fixed.R.size() == 1 ? fixed.R.front() : fixed.R[static_cast<std::size_t>(k - 1)];
    Eigen::LLT<Matrix<Scalar>> llt_r(Rk);
    if (llt_r.info() != Eigen::Success) throw NonSpd("simulate: R_k is not SPD");
    series.observations.row(k - 1) =
        (Hk * x + Matrix<Scalar>(llt_r.matrixL()) * draw(ny)).transpose();
  }
  series.states = std::move(states);
  return series;
}

/// Full dataset: ground truth plus train and test records. Stream split:
/// stream 0 draws (A*, P*), stream 1 the training record, stream 2 the test
/// record, so the three are independently reproducible from (spec, seed).
template <typename Scalar>
std::tuple<GroundTruth<Scalar>, TimeSeries<Scalar>, TimeSeries<Scalar>>
make_dataset(const DatasetSpec& spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng rng_gt = root.split(0);
  Rng rng_train = root.split(1);
  Rng rng_test = root.split(2);
  GroundTruth<Scalar> gt = make_ground_truth<Scalar>(spec, rng_gt);
  const FixedParams<Scalar> fixed = fixed_params<Scalar>(spec);
  TimeSeries<Scalar> train = simulate(gt, fixed, spec.K, rng_train);
  TimeSeries<Scalar> test = simulate(gt, fixed, spec.K, rng_test);
  return {std::move(gt), std::move(train), std::move(test)};
}

}  // namespace dglasso

#endif  // DGLASSO_DATAGEN_HPP
