#ifndef DGLASSO_CORE_HPP
#define DGLASSO_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dglasso {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Error hierarchy. Numerical failures carry enough context to name the
// offending matrix in diagnostics.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonSpd : Error {
  using Error::Error;
};

struct SingularSylvester : Error {
  using Error::Error;
};

struct SymmetryViolation : Error {
  using Error::Error;
};

struct MaxIterExceeded : Error {
  using Error::Error;
};

struct DivergenceDetected : Error {
  using Error::Error;
};

struct ZeroReference : Error {
  using Error::Error;
};

struct InvalidConfig : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

template <typename Scalar>
constexpr Scalar infinity() {
  return std::numeric_limits<Scalar>::infinity();
}

// (M + M^T)/2; the result is exactly symmetric in floating point.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar l1_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().sum();
}

template <typename Derived>
typename Derived::Scalar asymmetry(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Scalar denom = m.norm();
  if (denom == Scalar(0)) return Scalar(0);
  return (m - m.transpose()).norm() / denom;
}

// Cholesky-based SPD test; the filter and the solvers treat a failed
// factorization as the NonSPD signal.
template <typename Scalar>
bool is_spd(const Matrix<Scalar>& m) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  Eigen::LLT<Matrix<Scalar>> llt(m);
  return llt.info() == Eigen::Success;
}

// Symmetrized inverse of an SPD matrix. Throws NonSpd, naming `what`.
template <typename Scalar>
Matrix<Scalar> spd_inverse(const Matrix<Scalar>& m, const char* what) {
  Eigen::LLT<Matrix<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NonSpd(std::string("Cholesky failed for ") + what);
  }
  Matrix<Scalar> inv = llt.solve(Matrix<Scalar>::Identity(m.rows(), m.cols()));
  return symmetrize(inv);
}

// log det of an SPD matrix via Cholesky; throws NonSpd on failure.
template <typename Scalar>
Scalar spd_logdet(const Matrix<Scalar>& m, const char* what) {
  Eigen::LLT<Matrix<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NonSpd(std::string("Cholesky failed for ") + what);
  }
  return Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace dglasso

#endif  // DGLASSO_CORE_HPP
