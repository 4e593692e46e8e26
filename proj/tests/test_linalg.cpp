#include <doctest.h>

#include <cmath>

#include "erlab/linalg.hpp"
#include "generators.hpp"

using namespace erlab;

namespace {

// Two-pass loop oracle, independent of the Eigen expression in covariance().
Matrix loop_covariance(const Matrix& z) {
  const auto b = z.rows();
  const auto p = z.cols();
  Vector mean = Vector::Zero(p);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < p; ++j) mean(j) += z(i, j) / static_cast<double>(b);
  Matrix c = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index k = 0; k < p; ++k) c(j, k) += (z(i, j) - mean(j)) * (z(i, k) - mean(k));
  return c / static_cast<double>(b - 1);
}

}  // namespace

TEST_CASE("covariance hand examples") {
  Matrix z(2, 2);
  z << 1, -1, -1, 1;
  Matrix expect(2, 2);
  expect << 2, -2, -2, 2;
  CHECK(covariance(z).isApprox(expect, 1e-15));

  Matrix same = Matrix::Constant(5, 3, 2.5);
  CHECK(covariance(same).isZero(0.0));

  Matrix y(3, 2);
  y << 1, 0, 0, 1, -1, -1;
  Matrix oracle(2, 2);
  oracle << 1.0, 0.5, 0.5, 1.0;
  CHECK(covariance(y).isApprox(oracle, 1e-15));
  CHECK(covariance(y).isApprox(loop_covariance(y), 1e-15));
}

TEST_CASE("covariance rejects a single row") {
  CHECK_THROWS_AS(covariance(Matrix::Ones(1, 3)), DegenerateBatchError);
}

TEST_CASE("covariance properties on random batches") {
  CounterRng rng(101);
  for (int c = 0; c < 100; ++c) {
    CAPTURE(c);
    const int b = testgen::uniform_int(rng, 2, 12);
    const int p = testgen::uniform_int(rng, 1, 6);
    const Matrix z = testgen::normal_matrix(rng, b, p, testgen::uniform_real(rng, 0.1, 5.0));
    const Matrix cov = covariance(z);
    CHECK(cov == cov.transpose());
    CHECK(cov.isApprox(loop_covariance(z), 1e-12));
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("log_det_psd closed forms") {
  for (int p = 1; p <= 5; ++p) CHECK(log_det_psd(Matrix::Identity(p, p)) == doctest::Approx(0.0));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 8.0;
  CHECK(log_det_psd(d) == doctest::Approx(2.7725887222397811).epsilon(1e-14));
  CHECK(log_det_psd(d, LogDetMethod::Cholesky) == doctest::Approx(std::log(16.0)).epsilon(1e-14));
}

TEST_CASE("log_det_psd matches the eigenvalue product and scales with c") {
  CounterRng rng(202);
  for (int c = 0; c < 50; ++c) {
    CAPTURE(c);
    const int p = testgen::uniform_int(rng, 1, 6);
    const Matrix m = testgen::spd_matrix(rng, p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const double oracle = std::log(es.eigenvalues().prod());
    CHECK(log_det_psd(m) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(log_det_psd(m, LogDetMethod::Cholesky) == doctest::Approx(oracle).epsilon(1e-10));
    const double s = testgen::uniform_real(rng, 0.1, 10.0);
    CHECK(log_det_psd(Matrix(s * m)) == doctest::Approx(oracle + p * std::log(s)).epsilon(1e-10));
  }
}

TEST_CASE("log_det_psd names the failing eigenvalue or pivot") {
  Matrix m(2, 2);
  m << 1, 0, 0, -3;
  try {
    log_det_psd(m);
    FAIL("expected FactorizationError");
  } catch (const FactorizationError& e) {
    CHECK(e.index() == 0);
    CHECK(e.pivot() == doctest::Approx(-3.0));
  }
  try {
    log_det_psd(m, LogDetMethod::Cholesky);
    FAIL("expected FactorizationError");
  } catch (const FactorizationError& e) {
    CHECK(e.index() == 1);
    CHECK(e.pivot() == doctest::Approx(-3.0));
    CHECK(std::string(e.what()).find("pivot 1") != std::string::npos);
  }
  CHECK_THROWS_AS(log_det_psd(Matrix::Ones(2, 3)), DimensionError);
}

TEST_CASE("finite_diff_grad examples") {
  Vector x(1);
  x << 3.0;
  const Vector g = finite_diff_grad([](const Vector& v) { return v.squaredNorm(); }, x, 1e-4);
  CHECK(std::abs(g(0) - 6.0) <= 1e-7);

  Vector a(3);
  a << 1.5, -2.0, 0.25;
  for (double h : {1e-2, 0.5, 3.0}) {
    const Vector lin = finite_diff_grad([&](const Vector& v) { return a.dot(v) + 7.0; }, Vector(Vector::Ones(3)), h);
    CHECK(lin.isApprox(a, 1e-12));
  }

  Vector t(2);
  t << 3.0, 4.0;
  const Vector half = finite_diff_grad([](const Vector& v) { return 0.5 * v.squaredNorm(); }, t, 1e-4);
  CHECK(half.isApprox(t, 1e-10));

  CHECK_THROWS_AS(finite_diff_grad([](const Vector& v) { return v.sum(); }, t, 0.0), ValidationError);
}

TEST_CASE("fit_line recovers exact lines") {
  Vector x(4), y(4);
  x << 0, 1, 2, 3;
  y << 1, 3, 5, 7;
  const LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_line(Vector::Ones(3), y.head(3)), ValidationError);
  CHECK_THROWS_AS(fit_line(x, y.head(3)), DimensionError);
}
