#include "cvgp/pod.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cvgp;

namespace {

SnapshotSet from_matrix(const Matrix& values) {
  SnapshotSet s;
  Matrix pts(values.cols(), 1);
  for (Index i = 0; i < values.cols(); ++i) pts(i, 0) = static_cast<double>(i);
  s.grid = PhysicalGrid::from_points(pts);
  Matrix xi(values.rows(), 1);
  for (Index i = 0; i < values.rows(); ++i) xi(i, 0) = static_cast<double>(i);
  s.params = ParameterSet::from_samples(xi);
  s.values = values;
  return s;
}

}  // namespace

TEST_CASE("spectrum sum equals scaled Frobenius norm") {
  const Matrix X = testutil::randn(20, 8, 1);
  auto b = fit_pod_fixed_k(from_matrix(X), 3);
  // independent oracle: centered matrix assembled by hand
  Matrix C = X;
  for (Index j = 0; j < X.cols(); ++j) {
    double m = 0.0;
    for (Index i = 0; i < X.rows(); ++i) m += X(i, j);
    m /= X.rows();
    for (Index i = 0; i < X.rows(); ++i) C(i, j) -= m;
  }
  double fro = 0.0;
  for (Index i = 0; i < C.rows(); ++i)
    for (Index j = 0; j < C.cols(); ++j) fro += C(i, j) * C(i, j);
  CHECK(testutil::rel_diff(b.eigenvalues.sum(), fro / 20.0) < 1e-12);
  CHECK(b.eigenvalues.size() == 8);
  for (Index i = 1; i < b.eigenvalues.size(); ++i) CHECK(b.eigenvalues(i) <= b.eigenvalues(i - 1));
  CHECK(b.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("orthonormal basis, sign convention, monotone truncation error") {
  const Matrix X = testutil::randn(40, 25, 2);
  auto b = fit_pod_fixed_k(from_matrix(X), 12);
  const Matrix G = b.basis.transpose() * b.basis;
  CHECK((G - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-10);
  for (Index j = 0; j < b.k; ++j) {
    Index arg;
    b.basis.col(j).cwiseAbs().maxCoeff(&arg);
    CHECK(b.basis(arg, j) > 0.0);
  }
  for (Index r = 2; r <= 25; ++r) CHECK(b.truncation_error(r) <= b.truncation_error(r - 1));
}

TEST_CASE("projection error identity and diagonal latent covariance") {
  auto s = add_noise(generate_morlet_set(120, 60, 3), 0.05, 4);
  for (Index k : {1, 3, 10}) {
    auto b = fit_pod_fixed_k(s, k);
    auto z = project(b, s);
    const Matrix rec = reconstruct(b, z);
    const double D = static_cast<double>(s.n_snapshots());
    const double resid = (s.values - rec).squaredNorm() / D;
    const double tail = b.eigenvalues.tail(b.eigenvalues.size() - k).sum();
    CHECK(testutil::rel_diff(resid, tail) <= 1e-8);

    // relative projection error over the set equals sqrt(E_k)
    const Matrix centered = s.values.rowwise() - b.mean_row.transpose();
    const double rel = std::sqrt((s.values - rec).squaredNorm() / centered.squaredNorm());
    CHECK(testutil::rel_diff(rel, std::sqrt(b.truncation_error(k))) <= 1e-6);

    const Matrix zc = z.coords.rowwise() - z.coords.colwise().mean();
    const Matrix cov = zc.transpose() * zc / D;
    const double diag_max = cov.diagonal().maxCoeff();
    for (Index i = 0; i < k; ++i) {
      CHECK(testutil::rel_diff(cov(i, i), b.eigenvalues(i)) <= 1e-8);
      for (Index j = 0; j < k; ++j)
        if (i != j) CHECK(std::abs(cov(i, j)) <= 1e-8 * diag_max);
    }
  }
}

TEST_CASE("rank-1 data and full-rank completeness") {
  Vector v(6);
  v << 1, -2, 3, 0.5, 0, 4;
  Vector mu = Vector::LinSpaced(6, -1, 1);
  Matrix X(9, 6);
  for (Index i = 0; i < 9; ++i) X.row(i) = (mu + (i - 4.0) * 0.7 * v).transpose();
  auto s = from_matrix(X);
  auto b = fit_pod(s, 0.01);
  CHECK(b.k == 1);
  CHECK(b.truncation_error(1) <= 1e-14);
  CHECK((reconstruct(b, project(b, s)) - X).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix R = testutil::randn(7, 5, 3);
  auto rs = from_matrix(R);
  auto full = fit_pod_fixed_k(rs, 5);
  CHECK(full.truncation_error(5) <= 1e-12);
  CHECK((reconstruct(full, project(full, rs)) - R).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("mean row projects to zero; zero latents reconstruct the mean") {
  const Matrix X = testutil::randn(15, 9, 5);
  auto b = fit_pod_fixed_k(from_matrix(X), 4);
  Matrix m = b.mean_row.transpose();
  CHECK(project(b, m).coords.cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix rec = reconstruct(b, LatentCoords{Matrix::Zero(3, 4)});
  for (Index i = 0; i < 3; ++i) CHECK(rec.row(i) == b.mean_row.transpose());
}

TEST_CASE("eps_pod truncation picks the smallest qualifying rank") {
  auto s = generate_morlet_set(200, 100, 6);
  auto full = fit_pod_fixed_k(s, 100);
  for (double eps : {0.5, 0.2, 0.05, 0.01}) {
    auto b = fit_pod(s, eps);
    CHECK(b.truncation_error(b.k) <= eps * eps);
    if (b.k > 1) CHECK(full.truncation_error(b.k - 1) > eps * eps);
  }
}

TEST_CASE("truncated basis equals a fresh fit") {
  auto s = generate_morlet_set(50, 40, 7);
  auto big = fit_pod_fixed_k(s, 10);
  auto small = fit_pod_fixed_k(s, 4);
  auto t = big.truncated(4);
  CHECK(t.basis == small.basis);
  CHECK(t.mean_row == small.mean_row);
  CHECK(t.k == 4);
}

TEST_CASE("latent coordinates do not depend on the rank") {
  auto s = add_noise(generate_morlet_set(300, 500, 8), 0.01, 9);
  auto big = fit_pod_fixed_k(s, 30);
  const Matrix zb = project(big, s).coords;
  for (Index r : {1, 7, 10, 20}) {
    const Matrix zr = project(big.truncated(r), s).coords;
    CHECK(zr == zb.leftCols(r));
  }
}

TEST_CASE("POD errors") {
  Matrix same = Matrix::Ones(5, 4);
  CHECK_THROWS_AS(fit_pod(from_matrix(same), 0.1), DegenerateData);
  const Matrix X = testutil::randn(6, 4, 1);
  CHECK_THROWS_AS(fit_pod_fixed_k(from_matrix(X), 0), ValidationError);
  CHECK_THROWS_AS(fit_pod_fixed_k(from_matrix(X), 5), ValidationError);
  CHECK_THROWS_AS(fit_pod(from_matrix(X), 0.0), ValidationError);
  CHECK_THROWS_AS(fit_pod(from_matrix(testutil::randn(1, 4, 1)), 0.1), ValidationError);
  auto b = fit_pod_fixed_k(from_matrix(X), 2);
  CHECK_THROWS_AS(project(b, Matrix(testutil::randn(2, 3, 1))), DimensionMismatch);
  CHECK_THROWS_AS(reconstruct(b, LatentCoords{Matrix::Zero(2, 3)}), DimensionMismatch);
}
