#pragma once

#include <cstdint>

#include "cvgp/common.hpp"

namespace cvgp {

/// sigma_pi^2 * exp(-1/2 sum_i (a_i - b_i)^2 / l_i^2)
struct ArdSeKernel {
  double signal_sigma = 1.0;
  Vector lengthscales;

  Index dim() const { return lengthscales.size(); }
  void validate() const;
};

double kernel_eval(const ArdSeKernel& k, const Vector& a, const Vector& b);

/// GP conditioned on training data: holds the Cholesky factor of
/// K_y = K + (sigma_GPR^2 + jitter) I and alpha = K_y^{-1} y.
struct GprModel {
  ArdSeKernel kernel;
  double noise_sigma = 0.0;
  double noise_floor = 0.0;
  double jitter = 0.0;
  Matrix train_inputs;   // N x d
  Vector train_targets;  // N
  Matrix chol;           // lower triangular
  Vector alpha;

  Index n_train() const { return train_inputs.rows(); }
  Index dim() const { return train_inputs.cols(); }

  /// Factorizes K_y, escalating diagonal jitter from 1e-10 * trace / N by
  /// x10 up to three times. Throws NotPositiveDefinite if all attempts fail.
  static GprModel condition(ArdSeKernel kernel, double noise_sigma, Matrix inputs, Vector targets,
                            double noise_floor = 0.0);
};

struct GprPrediction {
  Vector mean;
  Vector variance;  // latent-function variance, observation noise excluded
};

double log_marginal_likelihood(const GprModel& m);

// Optimizer coordinates: theta = [log sigma_pi, log l_1..l_d, t] with
// sigma_GPR = noise_floor + exp(t).
Vector to_theta(const ArdSeKernel& k, double noise_sigma, double noise_floor);
ArdSeKernel kernel_from_theta(const Vector& theta);
double noise_from_theta(const Vector& theta, double noise_floor);

/// Log evidence at theta and, if `grad` is non-null, its gradient in theta.
double log_ml_at(const Matrix& inputs, const Vector& targets, const Vector& theta, double noise_floor, Vector* grad);

struct GprFitOptions {
  int restarts = 5;
  int max_iterations = 200;
};

/// Maximizes the log evidence by L-BFGS over theta from `restarts` random
/// starting points; returns the model of the best restart.
GprModel fit_hyperparameters(const Matrix& inputs, const Vector& targets, std::uint64_t seed,
                             const GprFitOptions& opts = {});

GprPrediction predict(const GprModel& m, const Matrix& queries);

}  // namespace cvgp
