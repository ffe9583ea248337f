#pragma once

#include <cstdint>
#include <vector>

#include "cvgp/dataset.hpp"
#include "cvgp/kernels.hpp"
#include "cvgp/recognition.hpp"

namespace cvgp {

struct MlpArchitecture {
  Index input_dim = 0;
  std::vector<Index> hidden_widths;
  Index output_dim = 2;

  kernels::MlpShape shape() const;
  void validate() const;
  bool operator==(const MlpArchitecture&) const = default;
};

/// Per-feature affine map (v - offset) / scale. Constant features keep
/// offset 0 and scale 1.
struct InputScaler {
  Vector offset;
  Vector scale;

  static InputScaler identity(Index n);
  /// Fitted on the columns of `features` (n_features x n_samples).
  static InputScaler fit(const Matrix& features);
  /// Stacks two scalers feature-wise (top rows first).
  static InputScaler stack(const InputScaler& top, const InputScaler& bottom);

  Index size() const { return offset.size(); }
  Matrix apply(const Matrix& features) const;
  Matrix invert(const Matrix& normalized) const;
};

/// ReLU MLP with a heteroscedastic Gaussian head: output rows [0, H) are
/// means and rows [H, 2H) raw variances (variance = softplus(raw)).
/// H = 1 for the pointwise model with inputs (z, x, xi); H = M for the
/// discrete baseline with inputs (z, xi).
struct LikelihoodNet {
  MlpArchitecture arch;
  Vector params;
  InputScaler scaler;

  Index n_heads() const { return arch.output_dim / 2; }

  /// He-normal weights (variance 2 / fan_in), zero biases, identity scaler.
  static LikelihoodNet init(const MlpArchitecture& arch, std::uint64_t seed);

  /// Raw (unnormalized) inputs, one per column; returns the output layer.
  Matrix forward_batch(const Matrix& raw_inputs) const;
};

struct NetOutput {
  double mu = 0.0;
  double sigma2 = 0.0;
};

NetOutput forward(const LikelihoodNet& net, const Vector& z, const Vector& x, const Vector& xi);

/// Mean over columns of 1/2 [(u - mu)^2 / sigma^2 + log(2 pi sigma^2)],
/// summed over heads. `inputs` are raw features, `targets` is H x B.
double nll_loss(const LikelihoodNet& net, const Matrix& inputs, const Matrix& targets, Vector* grad = nullptr);

enum class ScheduleUnit { Epoch, Iteration };

struct LrStage {
  double lr = 1e-3;
  Index count = 1;
  bool operator==(const LrStage&) const = default;
};

struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<LrStage> stages{{1e-3, 100}, {1e-4, 50}, {1e-5, 50}};
  ScheduleUnit unit = ScheduleUnit::Epoch;
  Index batch_size = 1000;
  Index n_mc = 1;
  std::uint64_t seed = 0;
  /// Iterations between loss-history entries (each entry averages them).
  Index log_interval = 50;

  void validate() const;
};

struct LossRecord {
  Index iteration = 0;
  double loss = 0.0;
};

struct TrainResult {
  LikelihoodNet net;
  std::vector<LossRecord> history;
};

/// Pointwise model: one record per (snapshot, grid point, MC draw); each
/// record gets a fresh latent draw from the recognition posterior whenever
/// it is visited. Fits the input scaler before training.
TrainResult train(LikelihoodNet net, const SnapshotSet& train_data, const LatentRecognition& recog,
                  const TrainConfig& cfg);

/// Discrete baseline: one record per (snapshot, MC draw), inputs (z, xi),
/// all M grid values as targets.
TrainResult train_discrete(LikelihoodNet net, const SnapshotSet& train_data, const LatentRecognition& recog,
                           const TrainConfig& cfg);

/// Architecture helpers for the two model families.
MlpArchitecture pointwise_architecture(Index k, Index m, Index d, std::vector<Index> hidden);
MlpArchitecture discrete_architecture(Index k, Index d, Index M, std::vector<Index> hidden);

}  // namespace cvgp
