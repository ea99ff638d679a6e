#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdgcc {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Relative threshold used for every positive-definiteness decision on input data.
inline constexpr double kDefiniteTolerance = 1e-10;

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar max_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return -std::numeric_limits<Scalar>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return std::numeric_limits<Scalar>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Largest real part over the spectrum; negative iff the matrix is Hurwitz.
template <typename Derived>
typename Derived::Scalar spectral_abscissa(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) return -std::numeric_limits<Scalar>::infinity();
  Eigen::EigenSolver<MatrixX<Scalar>> es(m.eval(), false);
  return es.eigenvalues().real().maxCoeff();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  using std::abs;
  const auto scale = std::max<typename Derived::Scalar>(1, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Smallest eigenvalue above tol * max(1, ||m||).
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& m,
                          typename Derived::Scalar tol = kDefiniteTolerance) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!is_symmetric(m, 1e-9)) return false;
  using Scalar = typename Derived::Scalar;
  const Scalar scale = std::max<Scalar>(1, m.operatorNorm());
  return min_eigenvalue(m) > tol * scale;
}

template <typename Derived>
bool is_negative_definite(const Eigen::MatrixBase<Derived>& m,
                          typename Derived::Scalar tol = kDefiniteTolerance) {
  return is_positive_definite((-m).eval(), tol);
}

/// Orthonormal basis of ker(m); singular values below rel_tol * sigma_max count as zero.
/// A zero matrix has the whole space as kernel.
template <typename Derived>
MatrixX<typename Derived::Scalar> null_space(const Eigen::MatrixBase<Derived>& m,
                                             typename Derived::Scalar rel_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = m.cols();
  if (m.rows() == 0 || m.cwiseAbs().maxCoeff() == Scalar(0))
    return MatrixX<Scalar>::Identity(n, n);
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(m.eval(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar cut = rel_tol * sv(0);
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cut) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// Place `block` at (row, col) of a square matrix and its transpose at (col, row).
template <typename Scalar, typename Derived>
void place_symmetric(MatrixX<Scalar>& target, Eigen::Index row, Eigen::Index col,
                     const Eigen::MatrixBase<Derived>& block) {
  target.block(row, col, block.rows(), block.cols()) = block;
  if (row != col) target.block(col, row, block.cols(), block.rows()) = block.transpose();
}

}  // namespace rdgcc
