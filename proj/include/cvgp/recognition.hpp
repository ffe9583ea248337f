#pragma once

#include <cstdint>
#include <vector>

#include "cvgp/dataset.hpp"
#include "cvgp/gpr.hpp"
#include "cvgp/pod.hpp"

namespace cvgp {

/// One GPR per latent coordinate, each fitted on standardized targets
/// (z_j - latent_mean_j) / latent_scale_j.
struct LatentRecognition {
  std::vector<GprModel> models;
  Vector latent_mean;
  Vector latent_scale;

  Index k() const { return static_cast<Index>(models.size()); }
  Index param_dim() const { return models.empty() ? 0 : models.front().dim(); }
  /// The first r coordinate models. Coordinates are fitted independently with
  /// per-coordinate seeds, so this equals a fresh rank-r fit.
  LatentRecognition truncated(Index r) const;
};

/// Factorized Gaussian over the latents at Q query parameters.
struct LatentPosterior {
  Matrix mean;      // Q x k
  Matrix variance;  // Q x k
};

LatentRecognition fit_recognition(const ParameterSet& params, const LatentCoords& latents, std::uint64_t seed,
                                  const GprFitOptions& opts = {});

LatentPosterior posterior_at(const LatentRecognition& r, const Matrix& queries);
inline LatentPosterior posterior_at(const LatentRecognition& r, const ParameterSet& queries) {
  return posterior_at(r, queries.samples);
}

/// n_samples independent draws; element s is a Q x k matrix.
std::vector<Matrix> sample_latents(const LatentPosterior& p, Index n_samples, std::uint64_t seed);

}  // namespace cvgp
