#pragma once

// Dense symmetric linear algebra shared by every estimator. Everything here is
// header-only and templated on the scalar type; the estimators instantiate it
// with double.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>

#include "robustcov/errors.hpp"

namespace robustcov {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// N observations in R^d stored as the rows of a dense matrix.
template <typename Scalar>
class BasicSample {
 public:
  using Matrix = MatrixX<Scalar>;

  explicit BasicSample(Matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() < 1 || rows_.cols() < 1) {
      throw InvalidInput("sample needs at least one row and one column");
    }
    if (!all_finite(rows_)) {
      throw InvalidInput("sample contains non-finite entries");
    }
  }

  Eigen::Index size() const noexcept { return rows_.rows(); }
  Eigen::Index dim() const noexcept { return rows_.cols(); }
  const Matrix& rows() const noexcept { return rows_; }
  auto row(Eigen::Index i) const { return rows_.row(i); }

  /// Rows [start, start + count) as a new sample.
  BasicSample slice(Eigen::Index start, Eigen::Index count) const {
    if (start < 0 || count < 1 || start + count > size()) {
      throw InvalidParameter("sample slice out of range");
    }
    return BasicSample(rows_.middleRows(start, count));
  }

  bool is_zero() const { return (rows_.array() == Scalar(0)).all(); }

 private:
  Matrix rows_;
};

using Sample = BasicSample<double>;

namespace detail {

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidInput("expected a non-empty square matrix");
  }
  if (!all_finite(m)) {
    throw InvalidInput("matrix contains non-finite entries");
  }
  const Real scale = m.cwiseAbs().maxCoeff();
  const Real tol = Real(1e-12) * (scale > Real(1) ? scale : Real(1));
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw InvalidInput("matrix is not symmetric");
  }
}

}  // namespace detail

/// (M + M^T) / 2, exactly symmetric.
template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = (m + m.transpose()) / Scalar(2);
  return out;
}

/// Spectral norm max |lambda_i| of a symmetric matrix.
template <typename Derived>
typename Derived::RealScalar op_norm(const Eigen::MatrixBase<Derived>& m) {
  detail::require_symmetric(m);
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m.derived(), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// Frobenius-nearest positive semi-definite matrix: negative eigenvalues are
/// clipped to zero.
template <typename Derived>
MatrixX<typename Derived::Scalar> psd_project(const Eigen::MatrixBase<Derived>& m) {
  detail::require_symmetric(m);
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m.derived());
  const VectorX<Scalar> clipped = es.eigenvalues().cwiseMax(Scalar(0));
  const MatrixX<Scalar>& v = es.eigenvectors();
  return symmetrize(v * clipped.asDiagonal() * v.transpose());
}

/// Smallest eigenvalue; used for PSD membership checks.
template <typename Derived>
typename Derived::RealScalar min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  detail::require_symmetric(m);
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(m.derived(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  const Real norm = op_norm(m);
  return min_eigenvalue(m) >= -Real(1e-10) * norm;
}

/// r(S) = tr(S) / ||S||, in [1, d] for PSD S.
template <typename Derived>
typename Derived::RealScalar effective_rank(const Eigen::MatrixBase<Derived>& s) {
  const auto norm = op_norm(s);
  if (norm == 0) {
    throw UndefinedScale("effective rank of the zero matrix is undefined");
  }
  return s.trace() / norm;
}

/// Uncentered second-moment matrix (1/N) sum_i x_i x_i^T.
template <typename Scalar>
MatrixX<Scalar> sample_covariance(const BasicSample<Scalar>& s) {
  const auto& x = s.rows();
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(x.cols(), x.cols());
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), Scalar(1) / Scalar(x.rows()));
  cov.template triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov;
}

}  // namespace robustcov
