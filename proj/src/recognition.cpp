#include "cvgp/recognition.hpp"

#include <cmath>
#include <exception>
#include <random>
#include <string>

namespace cvgp {

LatentRecognition LatentRecognition::truncated(Index r) const {
  if (r < 1 || r > k()) throw ValidationError("LatentRecognition::truncated: rank out of range");
  LatentRecognition out;
  out.models.assign(models.begin(), models.begin() + r);
  out.latent_mean = latent_mean.head(r);
  out.latent_scale = latent_scale.head(r);
  return out;
}

LatentRecognition fit_recognition(const ParameterSet& params, const LatentCoords& latents, std::uint64_t seed,
                                  const GprFitOptions& opts) {
  const Index k = latents.coords.cols();
  require_dims(latents.coords.rows() == params.size(), "fit_recognition: latent rows differ from parameter count");
  if (k < 1) throw ValidationError("fit_recognition: need at least one latent coordinate");

  LatentRecognition r;
  r.models.resize(static_cast<std::size_t>(k));
  r.latent_mean = latents.coords.colwise().mean().transpose();
  r.latent_scale.resize(k);
  const double n = static_cast<double>(latents.coords.rows());
  for (Index j = 0; j < k; ++j) {
    const double sd = std::sqrt((latents.coords.col(j).array() - r.latent_mean(j)).square().sum() / n);
    r.latent_scale(j) = sd > 0.0 ? sd : 1.0;
  }

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
#pragma omp parallel for schedule(dynamic, 1)
  for (Index j = 0; j < k; ++j) {
    try {
      Vector y = (latents.coords.col(j).array() - r.latent_mean(j)) / r.latent_scale(j);
      r.models[static_cast<std::size_t>(j)] =
          fit_hyperparameters(params.samples, y, derive_seed(seed, static_cast<std::uint64_t>(j)), opts);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (Index j = 0; j < k; ++j) {
    if (!errors[static_cast<std::size_t>(j)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(j)]);
    } catch (const std::exception& e) {
      throw RuntimeFailure("fit_recognition: latent coordinate " + std::to_string(j) + ": " + e.what());
    }
  }
  return r;
}

LatentPosterior posterior_at(const LatentRecognition& r, const Matrix& queries) {
  require_dims(r.k() > 0, "posterior_at: recognition model is empty");
  require_dims(queries.cols() == r.param_dim(), "posterior_at: query dimension " + std::to_string(queries.cols()) +
                                                    " differs from training dimension " + std::to_string(r.param_dim()));
  LatentPosterior p;
  p.mean.resize(queries.rows(), r.k());
  p.variance.resize(queries.rows(), r.k());
  for (Index j = 0; j < r.k(); ++j) {
    auto g = predict(r.models[static_cast<std::size_t>(j)], queries);
    const double s = r.latent_scale(j);
    p.mean.col(j) = (g.mean.array() * s + r.latent_mean(j)).matrix();
    p.variance.col(j) = g.variance * (s * s);
  }
  return p;
}

std::vector<Matrix> sample_latents(const LatentPosterior& p, Index n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("sample_latents: n_samples must be >= 1");
  require_dims(p.mean.rows() == p.variance.rows() && p.mean.cols() == p.variance.cols(),
               "sample_latents: mean and variance shapes differ");
  const Matrix sd = p.variance.cwiseMax(0.0).cwiseSqrt();
  std::vector<Matrix> out(static_cast<std::size_t>(n_samples));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (auto& z : out) {
    z.resize(p.mean.rows(), p.mean.cols());
    for (Index q = 0; q < z.rows(); ++q)
      for (Index j = 0; j < z.cols(); ++j) z(q, j) = p.mean(q, j) + sd(q, j) * normal(rng);
  }
  return out;
}

}  // namespace cvgp
