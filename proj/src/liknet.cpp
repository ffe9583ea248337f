#include "cvgp/liknet.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>

namespace cvgp {

kernels::MlpShape MlpArchitecture::shape() const {
  kernels::MlpShape s;
  s.widths.push_back(input_dim);
  s.widths.insert(s.widths.end(), hidden_widths.begin(), hidden_widths.end());
  s.widths.push_back(output_dim);
  return s;
}

void MlpArchitecture::validate() const {
  if (input_dim < 1) throw ValidationError("MLP input width must be >= 1");
  if (hidden_widths.empty()) throw ValidationError("MLP needs at least one hidden layer");
  for (Index w : hidden_widths)
    if (w < 1) throw ValidationError("MLP hidden widths must be >= 1");
  if (output_dim < 2 || output_dim % 2 != 0) throw ValidationError("MLP output width must be 2 * heads");
}

MlpArchitecture pointwise_architecture(Index k, Index m, Index d, std::vector<Index> hidden) {
  return MlpArchitecture{k + m + d, std::move(hidden), 2};
}

MlpArchitecture discrete_architecture(Index k, Index d, Index M, std::vector<Index> hidden) {
  return MlpArchitecture{k + d, std::move(hidden), 2 * M};
}

InputScaler InputScaler::identity(Index n) { return InputScaler{Vector::Zero(n), Vector::Ones(n)}; }

InputScaler InputScaler::fit(const Matrix& features) {
  const Index n = features.rows();
  InputScaler s = identity(n);
  if (features.cols() == 0) return s;
  const double cnt = static_cast<double>(features.cols());
  for (Index f = 0; f < n; ++f) {
    const double mu = features.row(f).mean();
    const double var = (features.row(f).array() - mu).square().sum() / cnt;
    if (var > 0.0) {
      s.offset(f) = mu;
      s.scale(f) = std::sqrt(var);
    }
  }
  return s;
}

InputScaler InputScaler::stack(const InputScaler& top, const InputScaler& bottom) {
  InputScaler s;
  s.offset.resize(top.size() + bottom.size());
  s.scale.resize(top.size() + bottom.size());
  s.offset << top.offset, bottom.offset;
  s.scale << top.scale, bottom.scale;
  return s;
}

Matrix InputScaler::apply(const Matrix& features) const {
  require_dims(features.rows() == size(), "InputScaler: feature count mismatch");
  return ((features.colwise() - offset).array().colwise() / scale.array()).matrix();
}

Matrix InputScaler::invert(const Matrix& normalized) const {
  require_dims(normalized.rows() == size(), "InputScaler: feature count mismatch");
  return ((normalized.array().colwise() * scale.array()).matrix()).colwise() + offset;
}

LikelihoodNet LikelihoodNet::init(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  LikelihoodNet net;
  net.arch = arch;
  const auto shape = arch.shape();
  net.params = Vector::Zero(shape.n_params());
  net.scaler = InputScaler::identity(arch.input_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Index l = 0; l < shape.n_layers(); ++l) {
    const double sd = std::sqrt(2.0 / static_cast<double>(shape.widths[l]));
    const Index off = shape.weight_offset(l);
    const Index cnt = shape.widths[l] * shape.widths[l + 1];
    for (Index i = 0; i < cnt; ++i) net.params(off + i) = sd * normal(rng);
  }
  return net;
}

Matrix LikelihoodNet::forward_batch(const Matrix& raw_inputs) const {
  return kernels::mlp_forward(arch.shape(), std::span<const double>(params.data(), params.size()), scaler.apply(raw_inputs));
}

NetOutput forward(const LikelihoodNet& net, const Vector& z, const Vector& x, const Vector& xi) {
  require_dims(net.n_heads() == 1, "forward: pointwise evaluation needs a single-head network");
  require_dims(z.size() + x.size() + xi.size() == net.arch.input_dim,
               "forward: (z, x, xi) widths do not sum to the network input width");
  Matrix in(net.arch.input_dim, 1);
  in << z, x, xi;
  const Matrix out = net.forward_batch(in);
  return NetOutput{out(0, 0), kernels::softplus(out(1, 0))};
}

double nll_loss(const LikelihoodNet& net, const Matrix& inputs, const Matrix& targets, Vector* grad) {
  if (inputs.cols() < 1) throw ValidationError("nll_loss: empty batch");
  return kernels::mlp_nll(net.arch.shape(), std::span<const double>(net.params.data(), net.params.size()),
                          net.scaler.apply(inputs), targets, grad);
}

void TrainConfig::validate() const {
  if (stages.empty()) throw ValidationError("TrainConfig: learning-rate schedule is empty");
  for (const auto& s : stages) {
    if (!(s.lr > 0.0) || !std::isfinite(s.lr)) throw ValidationError("TrainConfig: learning rates must be positive");
    if (s.count < 1) throw ValidationError("TrainConfig: stage lengths must be >= 1");
  }
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
  if (n_mc < 1) throw ValidationError("TrainConfig: n_mc must be >= 1");
  if (log_interval < 1) throw ValidationError("TrainConfig: log_interval must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    throw ValidationError("TrainConfig: invalid Adam constants");
  }
}

namespace {

// Fills columns [0, count) of (inputs, targets) from the given record ids.
using BatchFiller = std::function<void(std::span<const Index> records, Matrix& inputs, Matrix& targets)>;

TrainResult run_adam(LikelihoodNet net, Index n_records, const BatchFiller& fill, const TrainConfig& cfg) {
  const auto shape = net.arch.shape();
  const Index P = shape.n_params();
  const Index B = std::min(cfg.batch_size, n_records);
  const Index iters_per_epoch = (n_records + B - 1) / B;

  std::vector<Index> order(static_cast<std::size_t>(n_records));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Index cursor = n_records;  // forces a shuffle on the first batch

  Vector m1 = Vector::Zero(P), m2 = Vector::Zero(P), grad;
  double b1t = 1.0, b2t = 1.0;
  Index it = 0;
  double window_sum = 0.0;
  Index window_n = 0;
  TrainResult res;
  Matrix inputs, targets;

  for (const auto& stage : cfg.stages) {
    const Index n_iters = cfg.unit == ScheduleUnit::Epoch ? stage.count * iters_per_epoch : stage.count;
    for (Index s = 0; s < n_iters; ++s) {
      if (cursor >= n_records) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
      }
      const Index cnt = std::min(B, n_records - cursor);
      std::span<const Index> ids(order.data() + cursor, static_cast<std::size_t>(cnt));
      cursor += cnt;
      fill(ids, inputs, targets);

      const Matrix normalized = net.scaler.apply(inputs);
      const double loss = kernels::mlp_nll(shape, std::span<const double>(net.params.data(), P), normalized, targets, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Divergence("likelihood training diverged at iteration " + std::to_string(it) + " (loss " +
                         std::to_string(loss) + ", lr " + std::to_string(stage.lr) + ")");
      }
      ++it;
      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
      m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 / (1.0 - b1t);
      const double c2 = 1.0 / (1.0 - b2t);
      net.params.array() -= stage.lr * (m1.array() * c1) / ((m2.array() * c2).sqrt() + cfg.adam_eps);

      window_sum += loss;
      ++window_n;
      if (window_n == cfg.log_interval) {
        res.history.push_back({it, window_sum / static_cast<double>(window_n)});
        window_sum = 0.0;
        window_n = 0;
      }
    }
  }
  if (window_n > 0) res.history.push_back({it, window_sum / static_cast<double>(window_n)});
  res.net = std::move(net);
  return res;
}

struct TrainingPosterior {
  Matrix mean;
  Matrix sd;
};

TrainingPosterior training_posterior(const SnapshotSet& data, const LatentRecognition& recog) {
  require_dims(recog.param_dim() == data.params.dim(), "training: recognition parameter dimension differs from data");
  auto post = posterior_at(recog, data.params.samples);
  return {std::move(post.mean), post.variance.cwiseMax(0.0).cwiseSqrt()};
}

// Moments of the sampled latent features: spread of the means plus the mean
// posterior variance.
InputScaler latent_scaler(const TrainingPosterior& post) {
  InputScaler s = InputScaler::fit(post.mean.transpose());
  const Index D = post.mean.rows();
  for (Index j = 0; j < post.mean.cols(); ++j) {
    const double mu = post.mean.col(j).mean();
    const double var = (post.mean.col(j).array() - mu).square().sum() / static_cast<double>(D) +
                       post.sd.col(j).squaredNorm() / static_cast<double>(D);
    if (var > 0.0) {
      s.offset(j) = mu;
      s.scale(j) = std::sqrt(var);
    }
  }
  return s;
}

}  // namespace

TrainResult train(LikelihoodNet net, const SnapshotSet& train_data, const LatentRecognition& recog,
                  const TrainConfig& cfg) {
  cfg.validate();
  const Index k = recog.k();
  const Index m = train_data.grid.dim();
  const Index d = train_data.params.dim();
  const Index D = train_data.n_snapshots();
  const Index M = train_data.n_points();
  require_dims(net.n_heads() == 1 && net.arch.input_dim == k + m + d,
               "train: network input width must equal k + m + d with a single head");
  const auto post = training_posterior(train_data, recog);

  // Statistics over all D*M records factor into per-snapshot and per-point parts.
  const InputScaler zs = latent_scaler(post);
  const InputScaler xs = InputScaler::fit(train_data.grid.points.transpose());
  const InputScaler ps = InputScaler::fit(train_data.params.samples.transpose());
  net.scaler = InputScaler::stack(InputScaler::stack(zs, xs), ps);

  std::mt19937_64 rng(derive_seed(cfg.seed, "latent-draws"));
  std::normal_distribution<double> normal;
  const Index per_mc = D * M;
  auto fill = [&](std::span<const Index> ids, Matrix& inputs, Matrix& targets) {
    const Index cnt = static_cast<Index>(ids.size());
    inputs.resize(k + m + d, cnt);
    targets.resize(1, cnt);
    for (Index c = 0; c < cnt; ++c) {
      const Index rec = ids[static_cast<std::size_t>(c)] % per_mc;
      const Index i = rec / M;
      const Index p = rec % M;
      for (Index j = 0; j < k; ++j) inputs(j, c) = post.mean(i, j) + post.sd(i, j) * normal(rng);
      for (Index j = 0; j < m; ++j) inputs(k + j, c) = train_data.grid.points(p, j);
      for (Index j = 0; j < d; ++j) inputs(k + m + j, c) = train_data.params.samples(i, j);
      targets(0, c) = train_data.values(i, p);
    }
  };
  return run_adam(std::move(net), per_mc * cfg.n_mc, fill, cfg);
}

TrainResult train_discrete(LikelihoodNet net, const SnapshotSet& train_data, const LatentRecognition& recog,
                           const TrainConfig& cfg) {
  cfg.validate();
  const Index k = recog.k();
  const Index d = train_data.params.dim();
  const Index D = train_data.n_snapshots();
  const Index M = train_data.n_points();
  require_dims(net.n_heads() == M && net.arch.input_dim == k + d,
               "train_discrete: network must map (z, xi) to 2M outputs");
  const auto post = training_posterior(train_data, recog);
  net.scaler = InputScaler::stack(latent_scaler(post),
                                  InputScaler::fit(train_data.params.samples.transpose()));

  std::mt19937_64 rng(derive_seed(cfg.seed, "latent-draws"));
  std::normal_distribution<double> normal;
  auto fill = [&](std::span<const Index> ids, Matrix& inputs, Matrix& targets) {
    const Index cnt = static_cast<Index>(ids.size());
    inputs.resize(k + d, cnt);
    targets.resize(M, cnt);
    for (Index c = 0; c < cnt; ++c) {
      const Index i = ids[static_cast<std::size_t>(c)] % D;
      for (Index j = 0; j < k; ++j) inputs(j, c) = post.mean(i, j) + post.sd(i, j) * normal(rng);
      for (Index j = 0; j < d; ++j) inputs(k + j, c) = train_data.params.samples(i, j);
      targets.col(c) = train_data.values.row(i).transpose();
    }
  };
  return run_adam(std::move(net), D * cfg.n_mc, fill, cfg);
}

}  // namespace cvgp
