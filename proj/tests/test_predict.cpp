#include <cmath>

#include "cvgp/predict.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cvgp;

namespace {

// One-coordinate recognition whose posterior is N(mean, 0) everywhere:
// a vanishing signal variance leaves only the latent offset.
LatentRecognition constant_recognition(double mean, Index d) {
  Matrix x = testutil::randn(3, d, 1);
  ArdSeKernel k;
  k.signal_sigma = 1e-200;
  k.lengthscales = Vector::Ones(d);
  LatentRecognition r;
  r.models.push_back(GprModel::condition(k, 0.1, x, Vector::Zero(3)));
  r.latent_mean = Vector::Constant(1, mean);
  r.latent_scale = Vector::Ones(1);
  return r;
}

// Recognition with a genuine posterior spread.
LatentRecognition smooth_recognition() {
  Matrix x(6, 1);
  x << 0.0, 0.2, 0.4, 0.6, 0.8, 1.0;
  ArdSeKernel k;
  k.signal_sigma = 1.0;
  k.lengthscales = Vector::Constant(1, 0.3);
  LatentRecognition r;
  r.models.push_back(GprModel::condition(k, 0.05, x, x.col(0).array().sin()));
  r.latent_mean = Vector::Constant(1, 0.4);
  r.latent_scale = Vector::Constant(1, 2.0);
  return r;
}

PodBasis line_pod(Index M) {
  PodBasis b;
  b.mean_row = Vector::LinSpaced(M, 0.0, 1.0);
  b.basis = Vector::Ones(M).normalized();
  b.eigenvalues = Vector::Zero(M);
  b.eigenvalues(0) = 1.0;
  b.k = 1;
  return b;
}

// Input (z, x, xi); hidden h = relu(a z + c) stays in its linear regime, so
// mu = w (a z + c) + b and the raw variance output is the constant r.
LikelihoodNet linear_head(double a, double c, double w, double b, double r) {
  LikelihoodNet net;
  net.arch = pointwise_architecture(1, 1, 1, {1});
  net.params.resize(net.arch.shape().n_params());
  net.params << a, 0.0, 0.0, c, w, 0.0, b, r;
  net.scaler = InputScaler::identity(3);
  return net;
}

}  // namespace

TEST_CASE("degenerate latent posterior reduces to one forward pass") {
  auto recog = constant_recognition(0.7, 1);
  auto pod = line_pod(4);
  auto net = LikelihoodNet::init(pointwise_architecture(1, 1, 1, {8, 8}), 3);
  Matrix xi(2, 1), xq(3, 1);
  xi << 0.1, -0.4;
  xq << -1.0, 0.0, 0.5;
  auto pd = predict_cvae_gprr(pod, recog, net, xi, xq, 7, 1);
  CHECK(pd.n_latent_samples == 7);
  for (Index q = 0; q < 2; ++q)
    for (Index p = 0; p < 3; ++p) {
      auto o = forward(net, Vector::Constant(1, 0.7), xq.row(p).transpose(), xi.row(q).transpose());
      CHECK(pd.mean(q, p) == doctest::Approx(o.mu).epsilon(1e-14));
      CHECK(pd.variance(q, p) == doctest::Approx(o.sigma2).epsilon(1e-9));
    }
}

TEST_CASE("MC moments match the analytic pushforward of a linear head") {
  auto recog = smooth_recognition();
  auto pod = line_pod(2);
  const double a = 1.5, c = 50.0, w = -0.8, b = 0.3, r = -1.0;
  auto net = linear_head(a, c, w, b, r);
  Matrix xi(2, 1), xq(1, 1);
  xi << 0.35, 1.7;
  xq << 0.0;
  const Index n = 100000;
  auto pd = predict_cvae_gprr(pod, recog, net, xi, xq, n, 11);
  auto post = posterior_at(recog, xi);
  for (Index q = 0; q < 2; ++q) {
    const double mz = post.mean(q, 0), vz = post.variance(q, 0);
    REQUIRE(vz > 0.0);
    const double mean = w * (a * mz + c) + b;
    const double var_mu = w * w * a * a * vz;
    const double var = kernels::softplus(r) + var_mu;
    CHECK(std::abs(pd.mean(q, 0) - mean) <= 3.0 * std::sqrt(var_mu / n));
    CHECK(std::abs(pd.variance(q, 0) - var) <= 3.0 * var_mu * std::sqrt(2.0 / n));
  }
}

TEST_CASE("MC mean converges at the n^-1/2 rate") {
  auto recog = smooth_recognition();
  auto net = linear_head(1.0, 50.0, 2.0, 0.0, 0.0);
  Matrix xi(1, 1), xq(1, 1);
  xi << 1.5;
  xq << 0.0;
  const double vz = posterior_at(recog, xi).variance(0, 0);
  const double sd_mu = 2.0 * std::sqrt(vz);
  auto p1 = predict_cvae_gprr(line_pod(2), recog, net, xi, xq, 100, 1);
  auto p4 = predict_cvae_gprr(line_pod(2), recog, net, xi, xq, 400, 2);
  const double se = sd_mu * std::sqrt(1.0 / 100 + 1.0 / 400);
  CHECK(std::abs(p1.mean(0, 0) - p4.mean(0, 0)) <= 5.0 * se);
}

TEST_CASE("predictions are deterministic and variances nonnegative") {
  auto recog = smooth_recognition();
  auto net = LikelihoodNet::init(pointwise_architecture(1, 1, 1, {16, 16}), 8);
  Matrix xi = testutil::randn(9, 1, 1), xq = testutil::randn(11, 1, 2);
  auto a = predict_cvae_gprr(line_pod(2), recog, net, xi, xq, 50, 4);
  auto b = predict_cvae_gprr(line_pod(2), recog, net, xi, xq, 50, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK(a.variance.minCoeff() >= 0.0);
  const Matrix sd = a.stddev();
  CHECK((sd.array() * sd.array() - a.variance.array()).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("prediction input errors") {
  auto recog = smooth_recognition();
  auto net = LikelihoodNet::init(pointwise_architecture(1, 1, 1, {4}), 8);
  Matrix xi(1, 1), xq(1, 1);
  xi << 0.5;
  xq << 0.0;
  CHECK_THROWS_AS(predict_cvae_gprr(line_pod(2), recog, net, xi, xq, 0, 1), ValidationError);
  CHECK_THROWS_AS(predict_cvae_gprr(line_pod(2), recog, net, xi, Matrix::Zero(1, 2), 5, 1), DimensionMismatch);
  CHECK_THROWS_AS(predict_cvae_gprr(line_pod(2), recog, net, Matrix::Zero(1, 2), xq, 5, 1), DimensionMismatch);
  PodBasis two = line_pod(2);
  two.k = 2;
  CHECK_THROWS_AS(predict_cvae_gprr(two, recog, net, xi, xq, 5, 1), DimensionMismatch);
}

TEST_CASE("GPR-ROM decoding") {
  auto pod = line_pod(5);
  auto zero = constant_recognition(0.0, 2);
  const Matrix rom0 = predict_gpr_rom(pod, zero, testutil::randn(3, 2, 1));
  for (Index i = 0; i < 3; ++i) CHECK(rom0.row(i) == pod.mean_row.transpose());

  // predictions lie in the affine span of the basis
  const Matrix rom = predict_gpr_rom(pod, smooth_recognition().truncated(1), testutil::randn(4, 1, 2));
  for (Index i = 0; i < 4; ++i) {
    const Vector dev = rom.row(i).transpose() - pod.mean_row;
    CHECK((dev - pod.basis * (pod.basis.transpose() * dev)).norm() <= 1e-12);
  }
}

TEST_CASE("GPR-ROM reproduces noiseless training snapshots at full rank") {
  auto s = generate_morlet_set(30, 20, 3);
  auto pod = fit_pod_fixed_k(s, 21);
  auto recog = fit_recognition(s.params, project(pod, s), 1);
  const Matrix rom = predict_gpr_rom(pod, recog, s.params.samples);
  CHECK(relative_test_mean_error(rom, s.values) <= 1e-3);
}

TEST_CASE("discrete baseline prediction shape") {
  auto recog = constant_recognition(0.2, 1);
  auto net = LikelihoodNet::init(discrete_architecture(1, 1, 6, {8}), 2);
  Matrix xi(3, 1);
  xi << 0.0, 1.0, 2.0;
  auto pd = predict_discrete(recog, net, xi, 4, 1);
  CHECK(pd.mean.rows() == 3);
  CHECK(pd.mean.cols() == 6);
  Matrix in(2, 1);
  in << 0.2, 1.0;
  const Matrix out = net.forward_batch(in);
  for (Index p = 0; p < 6; ++p) {
    CHECK(pd.mean(1, p) == doctest::Approx(out(p, 0)).epsilon(1e-14));
    CHECK(pd.variance(1, p) == doctest::Approx(kernels::softplus(out(6 + p, 0))).epsilon(1e-9));
  }
  CHECK_THROWS_AS(predict_discrete(recog, net, Matrix::Zero(1, 2), 4, 1), DimensionMismatch);
}

TEST_CASE("relative test mean error") {
  Matrix t(1, 2), p(1, 2);
  t << 3, 4;
  p << 3, 0;
  CHECK(relative_test_mean_error(p, t) == doctest::Approx(0.8).epsilon(1e-15));
  const Matrix T = testutil::randn(6, 5, 1);
  CHECK(relative_test_mean_error(T, T) == 0.0);
  CHECK(relative_test_mean_error(2 * T, T) == doctest::Approx(1.0).epsilon(1e-14));

  const Matrix P = testutil::randn(6, 5, 2);
  Matrix Tp = T, Pp = P;
  for (Index i = 0; i < 6; ++i) Tp.row(i) = T.row(5 - i), Pp.row(i) = P.row(5 - i);
  CHECK(relative_test_mean_error(Pp, Tp) == doctest::Approx(relative_test_mean_error(P, T)).epsilon(1e-14));

  Matrix Z = T;
  Z.row(2).setZero();
  CHECK_THROWS_AS(relative_test_mean_error(P, Z), ValidationError);
  CHECK_THROWS_AS(relative_test_mean_error(P, T.leftCols(3)), DimensionMismatch);
}
