#pragma once

#include <cstdint>

#include "cvgp/liknet.hpp"
#include "cvgp/pod.hpp"
#include "cvgp/recognition.hpp"

namespace cvgp {

struct PredictiveDistribution {
  Matrix mean;      // Q x P
  Matrix variance;  // Q x P
  Index n_latent_samples = 0;

  Matrix stddev() const { return variance.cwiseSqrt(); }
};

/// Monte Carlo predictive moments: for each query parameter, draws
/// n_samples latents from the recognition posterior and combines the network
/// outputs by the law of total variance,
///   mean = <mu>,  variance = <sigma2 + mu^2> - <mu>^2  (clipped at 0).
/// Query q uses the latent stream derive_seed(seed, q).
PredictiveDistribution predict_cvae_gprr(const PodBasis& pod, const LatentRecognition& recog, const LikelihoodNet& net,
                                         const Matrix& xi_queries, const Matrix& x_queries, Index n_samples,
                                         std::uint64_t seed);

/// GPR-based ROM: posterior latent means decoded through the POD basis.
Matrix predict_gpr_rom(const PodBasis& pod, const LatentRecognition& recog, const Matrix& xi_queries);

/// Discrete baseline over the training grid, same moment combination.
PredictiveDistribution predict_discrete(const LatentRecognition& recog, const LikelihoodNet& net,
                                        const Matrix& xi_queries, Index n_samples, std::uint64_t seed);

/// Mean over rows of ||pred_i - truth_i||_2 / ||truth_i||_2.
double relative_test_mean_error(const Matrix& pred_mean, const Matrix& truth);

}  // namespace cvgp
