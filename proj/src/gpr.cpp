#include "cvgp/gpr.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <ceres/ceres.h>

#include "cvgp/kernels.hpp"

namespace cvgp {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr int kJitterEscalations = 3;
constexpr double kNoiseFloorRel = 1e-6;

double sample_std(const Vector& y) {
  if (y.size() < 2) return 0.0;
  const double mu = y.mean();
  return std::sqrt((y.array() - mu).square().sum() / static_cast<double>(y.size()));
}

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// K holds the noise-free Gram matrix; the factored matrix is K + (s2 + jitter) I.
Factorization factor_with_jitter(const Matrix& K, double noise_var) {
  const Index n = K.rows();
  const double base = kJitterStart * (K.trace() / static_cast<double>(n) + noise_var);
  Factorization f;
  Matrix Ky = K;
  Ky.diagonal().array() += noise_var;
  f.llt.compute(Ky);
  if (f.llt.info() == Eigen::Success) return f;
  double jitter = base;
  for (int e = 0; e <= kJitterEscalations; ++e, jitter *= 10.0) {
    Ky = K;
    Ky.diagonal().array() += noise_var + jitter;
    f.llt.compute(Ky);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NotPositiveDefinite("GPR: K_y is not positive definite after jitter escalation");
}

// Box on theta outside of which the objective reports infeasibility.
struct ThetaBox {
  Vector lo, hi;
};

ThetaBox theta_box(const Matrix& inputs, double scale) {
  const Index d = inputs.cols();
  ThetaBox box{Vector(d + 2), Vector(d + 2)};
  box.lo(0) = std::log(scale) - 12.0;
  box.hi(0) = std::log(scale) + 6.0;
  for (Index k = 0; k < d; ++k) {
    double range = inputs.col(k).maxCoeff() - inputs.col(k).minCoeff();
    if (!(range > 0.0)) range = 1.0;
    box.lo(k + 1) = std::log(range) - 10.0;
    box.hi(k + 1) = std::log(range) + 6.0;
  }
  box.lo(d + 1) = std::log(scale) - 25.0;
  box.hi(d + 1) = std::log(scale) + 3.0;
  return box;
}

class NegLogEvidence final : public ceres::FirstOrderFunction {
 public:
  NegLogEvidence(const Matrix& x, const Vector& y, double floor, ThetaBox box)
      : x_(x), y_(y), floor_(floor), box_(std::move(box)) {}

  bool Evaluate(const double* params, double* cost, double* gradient) const override {
    Eigen::Map<const Vector> theta(params, NumParameters());
    if ((theta.array() < box_.lo.array()).any() || (theta.array() > box_.hi.array()).any()) return false;
    try {
      Vector g;
      const double v = log_ml_at(x_, y_, theta, floor_, gradient ? &g : nullptr);
      if (!std::isfinite(v)) return false;
      cost[0] = -v;
      if (gradient) {
        if (!g.allFinite()) return false;
        for (Index i = 0; i < g.size(); ++i) gradient[i] = -g(i);
      }
      return true;
    } catch (const NotPositiveDefinite&) {
      return false;
    }
  }

  int NumParameters() const override { return static_cast<int>(x_.cols() + 2); }

 private:
  const Matrix& x_;
  const Vector& y_;
  double floor_;
  ThetaBox box_;
};

}  // namespace

void ArdSeKernel::validate() const {
  if (!(signal_sigma > 0.0) || !std::isfinite(signal_sigma)) throw ValidationError("ARD-SE: signal sigma must be positive and finite");
  if (lengthscales.size() < 1) throw ValidationError("ARD-SE: at least one lengthscale required");
  for (Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales(i) > 0.0) || !std::isfinite(lengthscales(i))) throw ValidationError("ARD-SE: lengthscales must be positive and finite");
  }
}

double kernel_eval(const ArdSeKernel& k, const Vector& a, const Vector& b) {
  require_dims(a.size() == k.dim() && b.size() == k.dim(), "kernel_eval: input dimension mismatch");
  if (!a.allFinite() || !b.allFinite()) throw ValidationError("kernel_eval: non-finite input");
  const double s = ((a - b).array() / k.lengthscales.array()).square().sum();
  return k.signal_sigma * k.signal_sigma * std::exp(-0.5 * s);
}

GprModel GprModel::condition(ArdSeKernel kernel, double noise_sigma, Matrix inputs, Vector targets, double noise_floor) {
  kernel.validate();
  require_dims(inputs.cols() == kernel.dim(), "GPR: input dimension differs from kernel dimension");
  require_dims(inputs.rows() == targets.size(), "GPR: input and target counts differ");
  if (inputs.rows() < 1) throw ValidationError("GPR: no training data");
  if (!(noise_sigma >= 0.0)) throw ValidationError("GPR: noise sigma must be >= 0");

  Matrix K;
  kernels::ard_se_gram(inputs, kernel.signal_sigma * kernel.signal_sigma, kernel.lengthscales, K);
  auto f = factor_with_jitter(K, noise_sigma * noise_sigma);

  GprModel m;
  m.kernel = std::move(kernel);
  m.noise_sigma = noise_sigma;
  m.noise_floor = noise_floor;
  m.jitter = f.jitter;
  m.chol = f.llt.matrixL();
  m.alpha = f.llt.solve(targets);
  m.train_inputs = std::move(inputs);
  m.train_targets = std::move(targets);
  return m;
}

double log_marginal_likelihood(const GprModel& m) {
  const double n = static_cast<double>(m.n_train());
  const double logdet_half = m.chol.diagonal().array().log().sum();
  return -0.5 * m.train_targets.dot(m.alpha) - logdet_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Vector to_theta(const ArdSeKernel& k, double noise_sigma, double noise_floor) {
  if (!(noise_sigma > noise_floor)) throw ValidationError("to_theta: noise sigma must exceed the noise floor");
  Vector theta(k.dim() + 2);
  theta(0) = std::log(k.signal_sigma);
  theta.segment(1, k.dim()) = k.lengthscales.array().log();
  theta(k.dim() + 1) = std::log(noise_sigma - noise_floor);
  return theta;
}

ArdSeKernel kernel_from_theta(const Vector& theta) {
  ArdSeKernel k;
  k.signal_sigma = std::exp(theta(0));
  k.lengthscales = theta.segment(1, theta.size() - 2).array().exp();
  return k;
}

double noise_from_theta(const Vector& theta, double noise_floor) { return noise_floor + std::exp(theta(theta.size() - 1)); }

double log_ml_at(const Matrix& inputs, const Vector& targets, const Vector& theta, double noise_floor, Vector* grad) {
  const Index d = inputs.cols();
  require_dims(theta.size() == d + 2, "log_ml_at: theta has wrong length");
  require_dims(inputs.rows() == targets.size(), "log_ml_at: input and target counts differ");
  const ArdSeKernel k = kernel_from_theta(theta);
  const double et = std::exp(theta(d + 1));
  const double sn = noise_floor + et;
  const double n = static_cast<double>(inputs.rows());

  Matrix K;
  kernels::ard_se_gram(inputs, k.signal_sigma * k.signal_sigma, k.lengthscales, K);
  auto f = factor_with_jitter(K, sn * sn);
  const Vector alpha = f.llt.solve(targets);
  const Matrix L = f.llt.matrixL();
  const double value =
      -0.5 * targets.dot(alpha) - L.diagonal().array().log().sum() - 0.5 * n * std::log(2.0 * std::numbers::pi);

  if (grad) {
    // dlogML/dtheta_j = 1/2 tr((alpha alpha^T - K_y^{-1}) dK_y/dtheta_j)
    Matrix W = -f.llt.solve(Matrix::Identity(inputs.rows(), inputs.rows()));
    W.noalias() += alpha * alpha.transpose();
    grad->resize(d + 2);
    (*grad)(0) = W.cwiseProduct(K).sum();
    grad->segment(1, d) = 0.5 * kernels::ard_se_lengthscale_traces(inputs, K, W, k.lengthscales);
    (*grad)(d + 1) = sn * et * W.trace();
  }
  return value;
}

GprModel fit_hyperparameters(const Matrix& inputs, const Vector& targets, std::uint64_t seed, const GprFitOptions& opts) {
  if (inputs.rows() < 2) throw ValidationError("fit_hyperparameters: need N >= 2");
  if (opts.restarts < 1) throw ValidationError("fit_hyperparameters: restarts must be >= 1");
  require_dims(inputs.rows() == targets.size(), "fit_hyperparameters: input and target counts differ");
  if (!inputs.allFinite() || !targets.allFinite()) throw ValidationError("fit_hyperparameters: non-finite training data");

  const Index d = inputs.cols();
  double scale = sample_std(targets);
  if (!(scale > 0.0)) scale = 1.0;
  const double floor = kNoiseFloorRel * scale;
  const ThetaBox box = theta_box(inputs, scale);

  Vector range(d);
  for (Index k = 0; k < d; ++k) {
    range(k) = inputs.col(k).maxCoeff() - inputs.col(k).minCoeff();
    if (!(range(k) > 0.0)) range(k) = 1.0;
  }

  constexpr std::array<double, 3> kLengthMultipliers{0.1, 0.5, 1.0};
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = opts.max_iterations;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;

  double best = -std::numeric_limits<double>::infinity();
  Vector best_theta;
  for (int r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    std::uniform_int_distribution<int> pick(0, static_cast<int>(kLengthMultipliers.size()) - 1);
    ArdSeKernel init;
    init.signal_sigma = scale;
    init.lengthscales.resize(d);
    for (Index k = 0; k < d; ++k) {
      // the first restart is the deterministic "full range" start
      const double mult = r == 0 ? 1.0 : kLengthMultipliers[static_cast<std::size_t>(pick(rng))];
      init.lengthscales(k) = mult * range(k);
    }
    Vector theta = to_theta(init, floor + 0.1 * scale, floor);

    ceres::GradientProblem problem(new NegLogEvidence(inputs, targets, floor, box));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, theta.data(), &summary);
    if (!theta.allFinite()) continue;
    double v = -std::numeric_limits<double>::infinity();
    try {
      v = log_ml_at(inputs, targets, theta, floor, nullptr);
    } catch (const NotPositiveDefinite&) {
      continue;
    }
    if (std::isfinite(v) && v > best) {
      best = v;
      best_theta = theta;
    }
  }
  if (best_theta.size() == 0) throw RuntimeFailure("fit_hyperparameters: no restart produced a finite objective");
  return GprModel::condition(kernel_from_theta(best_theta), noise_from_theta(best_theta, floor), inputs, targets, floor);
}

GprPrediction predict(const GprModel& m, const Matrix& queries) {
  require_dims(queries.cols() == m.dim(), "GPR predict: query dimension " + std::to_string(queries.cols()) +
                                               " differs from training dimension " + std::to_string(m.dim()));
  const double s2 = m.kernel.signal_sigma * m.kernel.signal_sigma;
  Matrix kappa;  // N x Q
  kernels::ard_se_cross(m.train_inputs, queries, s2, m.kernel.lengthscales, kappa);
  GprPrediction out;
  out.mean = kappa.transpose() * m.alpha;
  m.chol.triangularView<Eigen::Lower>().solveInPlace(kappa);
  out.variance = (s2 - kappa.colwise().squaredNorm().array()).cwiseMax(0.0).matrix().transpose();
  return out;
}

}  // namespace cvgp
