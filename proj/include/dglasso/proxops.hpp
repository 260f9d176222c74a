#ifndef DGLASSO_PROXOPS_HPP
#define DGLASSO_PROXOPS_HPP

#include <cassert>
#include <complex>
#include <string>

#include "dglasso/core.hpp"
#include "dglasso/lgssm.hpp"

namespace dglasso {

/// Entrywise soft thresholding, the proximity operator of gamma * ||.||_1.
template <typename Derived>
Matrix<typename Derived::Scalar> prox_l1(const Eigen::MatrixBase<Derived>& v,
                                         typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  return v.unaryExpr([gamma](Scalar x) {
    const Scalar shrunk = std::abs(x) - gamma;
    return shrunk > Scalar(0) ? (x > Scalar(0) ? shrunk : -shrunk) : Scalar(0);
  });
}

/// Sylvester solver for X A + A Y = Z (Bartels-Stewart on the complex Schur
/// forms of X and Y). The decompositions are kept so many right-hand sides
/// can be solved against one (X, Y) pair, which is the access pattern of the
/// inner splitting loops.
template <typename Scalar>
class SylvesterSolver {
 public:
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  SylvesterSolver(const Matrix<Scalar>& X, const Matrix<Scalar>& Y) {
    if (X.rows() != X.cols() || Y.rows() != Y.cols() || X.rows() != Y.rows())
      throw DimensionMismatch("Sylvester operands must be square and equal-sized");
    Eigen::ComplexSchur<Matrix<Scalar>> sx(X);
    Eigen::ComplexSchur<Matrix<Scalar>> sy(Y);
    if (sx.info() != Eigen::Success || sy.info() != Eigen::Success)
      throw SingularSylvester("Schur decomposition failed");
    Tx_ = sx.matrixT();
    Ux_ = sx.matrixU();
    Ty_ = sy.matrixT();
    Uy_ = sy.matrixU();
    const Scalar scale = Tx_.norm() + Ty_.norm();
    gap_tol_ = Scalar(1e-13) * (scale > Scalar(0) ? scale : Scalar(1));
    for (Index i = 0; i < Tx_.rows(); ++i)
      for (Index j = 0; j < Ty_.rows(); ++j)
        if (std::abs(Tx_(i, i) + Ty_(j, j)) <= gap_tol_)
          throw SingularSylvester("spectra of X and -Y overlap");
  }

  Matrix<Scalar> solve(const Matrix<Scalar>& Z) const {
    const Index n = Tx_.rows();
    if (Z.rows() != n || Z.cols() != n)
      throw DimensionMismatch("right-hand side has wrong shape");
    CMatrix C = Ux_.adjoint() * Z.template cast<Complex>() * Uy_;
    CMatrix B(n, n);
    for (Index j = 0; j < n; ++j) {
      Eigen::Matrix<Complex, Eigen::Dynamic, 1> rhs = C.col(j);
      for (Index i = 0; i < j; ++i) rhs -= B.col(i) * Ty_(i, j);
      // Back substitution against the shifted triangular factor.
      const Complex shift = Ty_(j, j);
      for (Index r = n - 1; r >= 0; --r) {
        Complex acc = rhs(r);
        for (Index c = r + 1; c < n; ++c) acc -= Tx_(r, c) * B(c, j);
        B(r, j) = acc / (Tx_(r, r) + shift);
      }
    }
    return (Ux_ * B * Uy_.adjoint()).real();
  }

 private:
  CMatrix Tx_, Ux_, Ty_, Uy_;
  Scalar gap_tol_ = Scalar(0);
};

/// One-shot Lyapunov/Sylvester solve: returns A with X A + A Y = Z.
template <typename DX, typename DY, typename DZ>
Matrix<typename DX::Scalar> solve_lyapunov(const Eigen::MatrixBase<DX>& X,
                                           const Eigen::MatrixBase<DY>& Y,
                                           const Eigen::MatrixBase<DZ>& Z) {
  using Scalar = typename DX::Scalar;
  return SylvesterSolver<Scalar>(X.eval(), Y.eval()).solve(Z.eval());
}

/// Statistics entering the quadratic trace term of the transition-matrix
/// subproblem: the fixed precision Pt and the smoothing moments Delta, Phi.
template <typename Scalar>
struct QuadStats {
  Matrix<Scalar> Pt;     // SPD
  Matrix<Scalar> Delta;
  Matrix<Scalar> Phi;    // symmetric PSD
};

/// The surrogate's empirical-covariance analogue
///   Pi = Psi - Delta A^T - A Delta^T + A Phi A^T,
/// symmetric PSD up to smoother noise.
template <typename Scalar>
struct PiMatrix {
  Matrix<Scalar> Pi;

  Scalar min_eigenvalue() const {
    return Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(Pi).eigenvalues().minCoeff();
  }
  bool numerically_psd() const {
    return min_eigenvalue() >= Scalar(-1e-8) * Pi.trace() / Scalar(Pi.rows());
  }
};

template <typename Scalar>
PiMatrix<Scalar> make_pi(const SmoothingStats<Scalar>& stats,
                         const Matrix<Scalar>& A) {
  Matrix<Scalar> pi = stats.Psi - stats.Delta * A.transpose() -
                      A * stats.Delta.transpose() +
                      A * stats.Phi * A.transpose();
  return {symmetrize(pi)};
}

/// Proximity operator of the quadratic trace term
///   W -> gamma tr(-Pt Delta W - Pt W Delta^T + Pt W Phi W^T),
/// solved through the Lyapunov equation
///   Pt^{-1} Z + Z (2 gamma Phi) = gamma (Delta + Pt^{-1} Delta^T Pt) + Pt^{-1} Wt.
template <typename Scalar>
Matrix<Scalar> prox_quad_trace(const Matrix<Scalar>& Wt,
                               const QuadStats<Scalar>& stats, Scalar gamma) {
  if (!(gamma > Scalar(0))) throw InvalidConfig("gamma must be positive");
  const Matrix<Scalar> Pinv = spd_inverse(stats.Pt, "Pt");
  const Matrix<Scalar> Phi = symmetrize(stats.Phi);
  const Matrix<Scalar> rhs =
      gamma * (stats.Delta + Pinv * stats.Delta.transpose() * stats.Pt) +
      Pinv * Wt;
  Matrix<Scalar> Z =
      SylvesterSolver<Scalar>(Pinv, Scalar(2) * gamma * Phi).solve(rhs);
#ifndef NDEBUG
  const Scalar resid =
      (-gamma * (stats.Delta + Pinv * stats.Delta.transpose() * stats.Pt) +
       Scalar(2) * gamma * Z * Phi + Pinv * Z - Pinv * Wt)
          .norm();
  assert(resid <= Scalar(1e-9) * std::max(Scalar(1), Wt.norm()));
#endif
  return Z;
}

/// Proximity operator of W -> gamma (-log det W + tr(W Pi)) on symmetric
/// matrices. Eigendecompose Wt - gamma Pi = U diag(w) U^T and map each
/// eigenvalue to (w + sqrt(w^2 + 4 gamma)) / 2; the output is SPD for any
/// symmetric input.
template <typename Scalar>
Matrix<Scalar> prox_logdet_trace(const Matrix<Scalar>& Wt,
                                 const PiMatrix<Scalar>& pi, Scalar gamma) {
  if (!(gamma > Scalar(0))) throw InvalidConfig("gamma must be positive");
  if (asymmetry(Wt) > Scalar(1e-8))
    throw SymmetryViolation("prox_logdet_trace requires a symmetric anchor");
  const Matrix<Scalar> M = symmetrize(Wt) - gamma * symmetrize(pi.Pi);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(M);
  if (es.info() != Eigen::Success)
    throw Error("eigendecomposition failed in prox_logdet_trace");
  Vector<Scalar> z = es.eigenvalues();
  for (Index i = 0; i < z.size(); ++i)
    z(i) = Scalar(0.5) * (z(i) + std::sqrt(z(i) * z(i) + Scalar(4) * gamma));
  Matrix<Scalar> out = es.eigenvectors() * z.asDiagonal() *
                       es.eigenvectors().transpose();
  return symmetrize(out);
}

}  // namespace dglasso

#endif  // DGLASSO_PROXOPS_HPP
