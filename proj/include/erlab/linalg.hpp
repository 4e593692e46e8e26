#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "erlab/errors.hpp"

namespace erlab {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;

/// Unbiased sample covariance of the rows of Z: (Z - mean)^T (Z - mean) / (B - 1).
template <typename Derived>
Mat<typename Derived::Scalar> covariance(const Eigen::MatrixBase<Derived>& Z) {
  using Scalar = typename Derived::Scalar;
  if (Z.rows() < 2) throw DegenerateBatchError("covariance needs at least 2 rows, got " + std::to_string(Z.rows()));
  const Mat<Scalar> centered = Z.rowwise() - Z.colwise().mean();
  Mat<Scalar> cov = (centered.transpose() * centered) / Scalar(Z.rows() - 1);
  // Exact symmetry; the product is symmetric only up to rounding.
  return (cov + cov.transpose()) / Scalar(2);
}

enum class LogDetMethod { Eigen, Cholesky };

/// log det M for a symmetric positive-definite M.
///
/// The eigendecomposition route tolerates near-singular inputs better and is the
/// default; the Cholesky route is cheaper. Either throws FactorizationError with
/// the index and value of the first non-positive eigenvalue / pivot.
template <typename Derived>
typename Derived::Scalar log_det_psd(const Eigen::MatrixBase<Derived>& M, LogDetMethod method = LogDetMethod::Eigen) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() != M.cols()) throw DimensionError("log_det_psd needs a square matrix");
  if (method == LogDetMethod::Cholesky) {
    Eigen::LLT<Mat<Scalar>> llt(M);
    if (llt.info() == Eigen::Success) {
      const auto diag = llt.matrixLLT().diagonal();
      if ((diag.array() > Scalar(0)).all()) return Scalar(2) * diag.array().log().sum();
    }
    // Locate the failing pivot with an unblocked pass for the error message.
    Mat<Scalar> a = M;
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
      Scalar pivot = a(k, k) - a.row(k).head(k).squaredNorm();
      if (!(pivot > Scalar(0))) {
        std::ostringstream os;
        os << "Cholesky factorization failed at pivot " << k << " (value " << pivot << ")";
        throw FactorizationError(os.str(), k, static_cast<double>(pivot));
      }
      a(k, k) = std::sqrt(pivot);
      for (Eigen::Index i = k + 1; i < a.rows(); ++i)
        a(i, k) = (a(i, k) - a.row(i).head(k).dot(a.row(k).head(k))) / a(k, k);
    }
    return Scalar(2) * a.diagonal().array().log().sum();
  }
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw FactorizationError("eigendecomposition did not converge", -1, 0.0);
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (!(ev(i) > Scalar(0))) {
      std::ostringstream os;
      os << "matrix is not positive definite: eigenvalue " << i << " = " << ev(i);
      throw FactorizationError(os.str(), i, static_cast<double>(ev(i)));
    }
  }
  return ev.array().log().sum();
}

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / 2h.
///
/// Deliberately independent of the autodiff tape; the test suites use it as
/// the oracle for every reverse-mode gradient.
template <typename Fn, typename Scalar>
Vec<Scalar> finite_diff_grad(Fn&& f, const Vec<Scalar>& x, Scalar h) {
  if (!(h > Scalar(0))) throw ValidationError("finite_diff_grad needs h > 0");
  Vec<Scalar> g(x.size());
  Vec<Scalar> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const Scalar up = f(probe);
    probe(i) = x(i) - h;
    const Scalar down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (Scalar(2) * h);
  }
  return g;
}

/// ||a - b|| / max(||b||, floor); the comparison metric of the gradient checks.
inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-12) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

/// Ordinary least-squares line y = intercept + slope * x.
inline LineFit fit_line(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_line needs two equal-length series of >= 2 points");
  const double mx = x.mean();
  const double my = y.mean();
  const Vector dx = x.array() - mx;
  const Vector dy = y.array() - my;
  const double sxx = dx.squaredNorm();
  if (!(sxx > 0.0)) throw ValidationError("fit_line: abscissae are all equal");
  LineFit fit;
  fit.slope = dx.dot(dy) / sxx;
  fit.intercept = my - fit.slope * mx;
  const double syy = dy.squaredNorm();
  const double sse = (dy - fit.slope * dx).squaredNorm();
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

}  // namespace erlab
