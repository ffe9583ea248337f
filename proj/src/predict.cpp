#include "cvgp/predict.hpp"

#include <string>

namespace cvgp {

namespace {

// Accumulates <mu>, <sigma2 + mu^2> for each head over the sample columns.
// out is 2H x (S*P) laid out as sample-major blocks of P columns.
void combine_moments(const Matrix& out, Index n_samples, Index P, Index H, Eigen::Ref<Vector> mean,
                     Eigen::Ref<Vector> var) {
  // H == 1: columns are (sample, point); H > 1 (discrete): columns are samples and P == H
  Vector s1 = Vector::Zero(P), s2 = Vector::Zero(P);
  for (Index s = 0; s < n_samples; ++s) {
    for (Index p = 0; p < P; ++p) {
      const Index col = H == 1 ? s * P + p : s;
      const Index head = H == 1 ? 0 : p;
      const double mu = out(head, col);
      const double v = kernels::softplus(out(H + head, col));
      s1(p) += mu;
      s2(p) += v + mu * mu;
    }
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  mean = s1 * inv;
  var = (s2 * inv - mean.cwiseAbs2()).cwiseMax(0.0);
}

}  // namespace

PredictiveDistribution predict_cvae_gprr(const PodBasis& pod, const LatentRecognition& recog, const LikelihoodNet& net,
                                         const Matrix& xi_queries, const Matrix& x_queries, Index n_samples,
                                         std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("predict_cvae_gprr: n_samples must be >= 1");
  const Index k = recog.k();
  const Index m = x_queries.cols();
  const Index d = xi_queries.cols();
  require_dims(pod.k == k, "predict_cvae_gprr: POD rank " + std::to_string(pod.k) + " differs from recognition rank " +
                               std::to_string(k));
  require_dims(net.n_heads() == 1 && net.arch.input_dim == k + m + d,
               "predict_cvae_gprr: network input width differs from k + m + d");
  const Index Q = xi_queries.rows();
  const Index P = x_queries.rows();
  const LatentPosterior post = posterior_at(recog, xi_queries);

  PredictiveDistribution pd;
  pd.mean.resize(Q, P);
  pd.variance.resize(Q, P);
  pd.n_latent_samples = n_samples;

  // Only the latent block changes across samples of one query.
#pragma omp parallel for schedule(dynamic, 1)
  for (Index q = 0; q < Q; ++q) {
    LatentPosterior one{post.mean.row(q), post.variance.row(q)};
    const auto draws = sample_latents(one, n_samples, derive_seed(seed, static_cast<std::uint64_t>(q)));
    Matrix in(k + m + d, n_samples * P);
    for (Index s = 0; s < n_samples; ++s) {
      for (Index p = 0; p < P; ++p) {
        const Index c = s * P + p;
        in.block(0, c, k, 1) = draws[static_cast<std::size_t>(s)].row(0).transpose();
        in.block(k, c, m, 1) = x_queries.row(p).transpose();
        in.block(k + m, c, d, 1) = xi_queries.row(q).transpose();
      }
    }
    const Matrix out = net.forward_batch(in);
    Vector mean(P), var(P);
    combine_moments(out, n_samples, P, 1, mean, var);
    pd.mean.row(q) = mean.transpose();
    pd.variance.row(q) = var.transpose();
  }
  return pd;
}

Matrix predict_gpr_rom(const PodBasis& pod, const LatentRecognition& recog, const Matrix& xi_queries) {
  require_dims(pod.k == recog.k(), "predict_gpr_rom: POD rank differs from recognition rank");
  return reconstruct(pod, LatentCoords{posterior_at(recog, xi_queries).mean});
}

PredictiveDistribution predict_discrete(const LatentRecognition& recog, const LikelihoodNet& net,
                                        const Matrix& xi_queries, Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("predict_discrete: n_samples must be >= 1");
  const Index k = recog.k();
  const Index d = xi_queries.cols();
  require_dims(net.arch.input_dim == k + d, "predict_discrete: network input width differs from k + d");
  const Index Q = xi_queries.rows();
  const Index M = net.n_heads();
  const LatentPosterior post = posterior_at(recog, xi_queries);

  PredictiveDistribution pd;
  pd.mean.resize(Q, M);
  pd.variance.resize(Q, M);
  pd.n_latent_samples = n_samples;
#pragma omp parallel for schedule(dynamic, 1)
  for (Index q = 0; q < Q; ++q) {
    LatentPosterior one{post.mean.row(q), post.variance.row(q)};
    const auto draws = sample_latents(one, n_samples, derive_seed(seed, static_cast<std::uint64_t>(q)));
    Matrix in(k + d, n_samples);
    for (Index s = 0; s < n_samples; ++s) {
      in.block(0, s, k, 1) = draws[static_cast<std::size_t>(s)].row(0).transpose();
      in.block(k, s, d, 1) = xi_queries.row(q).transpose();
    }
    const Matrix out = net.forward_batch(in);
    Vector mean(M), var(M);
    combine_moments(out, n_samples, M, M, mean, var);
    pd.mean.row(q) = mean.transpose();
    pd.variance.row(q) = var.transpose();
  }
  return pd;
}

double relative_test_mean_error(const Matrix& pred_mean, const Matrix& truth) {
  require_dims(pred_mean.rows() == truth.rows() && pred_mean.cols() == truth.cols(),
               "relative_test_mean_error: shape mismatch");
  if (truth.rows() < 1) throw ValidationError("relative_test_mean_error: no test cases");
  double acc = 0.0;
  for (Index i = 0; i < truth.rows(); ++i) {
    const double nt = truth.row(i).norm();
    if (!(nt > 0.0)) throw ValidationError("relative_test_mean_error: truth row " + std::to_string(i) + " has zero norm");
    acc += (pred_mean.row(i) - truth.row(i)).norm() / nt;
  }
  return acc / static_cast<double>(truth.rows());
}

}  // namespace cvgp
