#include <cmath>
#include <numbers>

#include "cvgp/gpr.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cvgp;

namespace {

ArdSeKernel kern(double s, std::initializer_list<double> l) {
  ArdSeKernel k;
  k.signal_sigma = s;
  k.lengthscales.resize(static_cast<Index>(l.size()));
  Index i = 0;
  for (double v : l) k.lengthscales(i++) = v;
  return k;
}

// Dense brute force with an explicit inverse.
Matrix dense_gram(const ArdSeKernel& k, const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Index c = 0; c < a.cols(); ++c) s += std::pow((a(i, c) - b(j, c)) / k.lengthscales(c), 2);
      out(i, j) = k.signal_sigma * k.signal_sigma * std::exp(-0.5 * s);
    }
  return out;
}

}  // namespace

TEST_CASE("kernel_eval") {
  auto k = kern(1.0, {1.0});
  Vector a(1), b(1);
  a << 0.3;
  b << 1.3;
  CHECK(kernel_eval(k, a, b) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(kernel_eval(k, a, a) == 1.0);
  auto k2 = kern(1.7, {0.5, 2.0});
  Vector c = testutil::randn(2, 1, 1).col(0), e = testutil::randn(2, 1, 2).col(0);
  CHECK(kernel_eval(k2, c, e) == kernel_eval(k2, e, c));
  CHECK(kernel_eval(k2, c, c) == doctest::Approx(1.7 * 1.7));
  CHECK_THROWS_AS(kernel_eval(k2, a, c), DimensionMismatch);
}

TEST_CASE("log marginal likelihood, scalar cases") {
  // K = sigma_pi^2 at a single point
  Matrix x(1, 1);
  x << 0.0;
  Vector y0(1), yc(1);
  y0 << 0.0;
  yc << 1.5;
  auto m0 = GprModel::condition(kern(std::sqrt(0.75), {1.0}), 0.5, x, y0);
  CHECK(log_marginal_likelihood(m0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
  auto mc = GprModel::condition(kern(1.0, {1.0}), std::sqrt(1.5), x, yc);
  const double v = 2.5;
  CHECK(log_marginal_likelihood(mc) ==
        doctest::Approx(-0.5 * (std::log(2 * std::numbers::pi * v) + 1.5 * 1.5 / v)).epsilon(1e-14));
}

TEST_CASE("log ML and posterior match dense brute force") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Index N = seed % 2 ? 6 : 5;
    const Matrix X = testutil::randn(N, 1 + seed % 3, 100 + seed);
    const Vector y = testutil::randn(N, 1, 200 + seed).col(0);
    ArdSeKernel k;
    k.signal_sigma = 0.8 + 0.1 * seed;
    k.lengthscales = (testutil::randn(X.cols(), 1, 300 + seed).array().abs() + 0.5).matrix().col(0);
    const double sn = 0.1 + 0.02 * seed;
    auto m = GprModel::condition(k, sn, X, y);
    CHECK(m.jitter == 0.0);

    Matrix Ky = dense_gram(k, X, X);
    Ky.diagonal().array() += sn * sn;
    const Matrix Kinv = Ky.inverse();
    const double lml = -0.5 * y.dot(Kinv * y) - 0.5 * std::log(Ky.determinant()) - 0.5 * N * std::log(2 * std::numbers::pi);
    CHECK(std::abs(log_marginal_likelihood(m) - lml) <= 1e-9 * std::max(1.0, std::abs(lml)));
    CHECK(((m.chol * m.chol.transpose()) - Ky).norm() <= 1e-8 * Ky.norm());
    CHECK((Ky * m.alpha - y).norm() <= 1e-8 * y.norm());

    const Matrix Q = testutil::randn(7, X.cols(), 400 + seed);
    const Matrix kq = dense_gram(k, X, Q);
    const Vector mean = kq.transpose() * Kinv * y;
    const Vector var = (k.signal_sigma * k.signal_sigma - (kq.transpose() * Kinv * kq).diagonal().array()).matrix();
    auto p = predict(m, Q);
    CHECK((p.mean - mean).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((p.variance - var).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(p.variance.maxCoeff() <= k.signal_sigma * k.signal_sigma + 1e-10);
  }
}

TEST_CASE("log ML gradient vs central differences") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Index d = 1 + seed % 3;
    const Matrix X = testutil::randn(12, d, 10 + seed);
    const Vector y = testutil::randn(12, 1, 20 + seed).col(0);
    const double floor = 1e-6;
    Vector theta = testutil::randn(d + 2, 1, 30 + seed).col(0) * 0.5;
    theta(d + 1) -= 1.5;
    Vector g;
    log_ml_at(X, y, theta, floor, &g);
    for (Index i = 0; i < theta.size(); ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += 1e-5;
      tm(i) -= 1e-5;
      const double fd = (log_ml_at(X, y, tp, floor, nullptr) - log_ml_at(X, y, tm, floor, nullptr)) / 2e-5;
      CHECK(std::abs(fd - g(i)) <= 1e-4 * std::max(1.0, std::abs(g(i))));
    }
  }
}

TEST_CASE("theta parameterization round trip") {
  auto k = kern(1.3, {0.2, 4.0});
  Vector t = to_theta(k, 0.05, 1e-6);
  auto k2 = kernel_from_theta(t);
  CHECK(k2.signal_sigma == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(k2.lengthscales(1) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(noise_from_theta(t, 1e-6) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK_THROWS_AS(to_theta(k, 1e-7, 1e-6), ValidationError);
}

TEST_CASE("interpolation and prior reversion") {
  Matrix X(5, 1);
  X << 0.0, 0.2, 0.4, 0.6, 0.8;
  Vector y = X.col(0).array().sin();
  auto m = GprModel::condition(kern(1.0, {0.3}), 1e-7, X, y);
  auto p = predict(m, X);
  CHECK((p.mean - y).cwiseAbs().maxCoeff() <= 1e-6);
  Matrix far(1, 1);
  far << 0.8 + 20 * 0.3;
  auto pf = predict(m, far);
  CHECK(std::abs(pf.mean(0)) <= 1e-6);
  CHECK(std::abs(pf.variance(0) - 1.0) <= 1e-6);
  CHECK_THROWS_AS(predict(m, Matrix::Zero(2, 2)), DimensionMismatch);
}

TEST_CASE("predictions are invariant under training permutation") {
  const Matrix X = testutil::randn(8, 2, 1);
  const Vector y = testutil::randn(8, 1, 2).col(0);
  std::vector<Index> perm{3, 0, 7, 5, 1, 6, 2, 4};
  Matrix Xp(8, 2);
  Vector yp(8);
  for (Index i = 0; i < 8; ++i) Xp.row(i) = X.row(perm[i]), yp(i) = y(perm[i]);
  auto k = kern(1.1, {0.7, 1.4});
  const Matrix Q = testutil::randn(5, 2, 3);
  auto a = predict(GprModel::condition(k, 0.1, X, y), Q);
  auto b = predict(GprModel::condition(k, 0.1, Xp, yp), Q);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("jitter escalation rescues duplicated inputs") {
  Matrix X(4, 1);
  X << 0.5, 0.5, 0.5, 0.5;
  Vector y = Vector::Ones(4);
  auto m = GprModel::condition(kern(1.0, {1.0}), 0.0, X, y);
  CHECK(m.jitter > 0.0);
  CHECK(std::isfinite(log_marginal_likelihood(m)));
}

TEST_CASE("fit_hyperparameters recovers a smooth function") {
  const Index N = 40;
  Matrix X(N, 1);
  for (Index i = 0; i < N; ++i) X(i, 0) = static_cast<double>(i) / (N - 1);
  Vector y = (3.0 * X.col(0).array()).sin();
  auto m = fit_hyperparameters(X, y, 7);
  Matrix mid(N - 1, 1);
  for (Index i = 0; i + 1 < N; ++i) mid(i, 0) = 0.5 * (X(i, 0) + X(i + 1, 0));
  auto p = predict(m, mid);
  for (Index i = 0; i + 1 < N; ++i) CHECK(std::abs(p.mean(i) - std::sin(3.0 * mid(i, 0))) <= 1e-3);
  CHECK(m.noise_sigma >= m.noise_floor);

  auto again = fit_hyperparameters(X, y, 7);
  CHECK(again.alpha == m.alpha);
  CHECK(log_marginal_likelihood(m) > log_ml_at(X, y, to_theta(kern(0.7, {1.0}), 0.07, m.noise_floor), m.noise_floor, nullptr));
}

TEST_CASE("fit_hyperparameters on zero targets") {
  Matrix X = testutil::randn(10, 2, 4);
  Vector y = Vector::Zero(10);
  auto m = fit_hyperparameters(X, y, 1);
  auto p = predict(m, testutil::randn(6, 2, 5));
  CHECK(p.mean.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("fit_hyperparameters input errors") {
  Matrix X = testutil::randn(1, 1, 1);
  CHECK_THROWS_AS(fit_hyperparameters(X, Vector::Zero(1), 0), ValidationError);
  CHECK_THROWS_AS(fit_hyperparameters(testutil::randn(3, 1, 1), Vector::Zero(2), 0), DimensionMismatch);
  GprFitOptions o;
  o.restarts = 0;
  CHECK_THROWS_AS(fit_hyperparameters(testutil::randn(3, 1, 1), Vector::Zero(3), 0, o), ValidationError);
}
