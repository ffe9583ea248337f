#pragma once

// Data-parallel numerical kernels. Every kernel in `cvgp::kernels` has a
// plain-loop twin in `cvgp::kernels::reference` that is single-threaded and
// avoids Eigen products; tests compare the two and bench_kernels times them.
//
// Reductions are computed over a fixed partition of the work (independent of
// the thread count) and combined in partition order, so results are bitwise
// reproducible for any OMP_NUM_THREADS.

#include <cmath>
#include <span>
#include <vector>

#include "cvgp/common.hpp"

namespace cvgp::kernels {

/// Layer widths [in, h_1, ..., h_{L-1}, out] of a ReLU MLP whose parameters
/// are stored flat: for each layer, W (out x in, column-major) then b.
struct MlpShape {
  std::vector<Index> widths;

  Index n_layers() const { return static_cast<Index>(widths.size()) - 1; }
  Index input_dim() const { return widths.front(); }
  Index output_dim() const { return widths.back(); }
  Index n_params() const;
  Index weight_offset(Index layer) const;
  Index bias_offset(Index layer) const { return weight_offset(layer) + widths[layer + 1] * widths[layer]; }
};

/// Columns per work chunk in the batched MLP kernels.
inline constexpr Index kMlpChunk = 256;

// Overflow-safe log(1 + exp(r)), floored at the smallest normal double so the
// variance it represents is strictly positive.
inline double softplus(double r) {
  double v = r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r));
  return v < 2.2250738585072014e-308 ? 2.2250738585072014e-308 : v;
}

inline double sigmoid(double r) {
  if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
  double e = std::exp(r);
  return e / (1.0 + e);
}

/// Gaussian negative log density 0.5 * ((u - mu)^2 / var + log(2 pi var)).
double gaussian_nll(double u, double mu, double var);

// ---- ARD squared-exponential kernel -------------------------------------

/// out(i, j) = sigma2 * exp(-0.5 * sum_k (a(i,k) - b(j,k))^2 / l_k^2).
void ard_se_cross(const Matrix& a, const Matrix& b, double sigma2, const Vector& lengthscales, Matrix& out);
/// Symmetric Gram matrix of the rows of `a`.
void ard_se_gram(const Matrix& a, double sigma2, const Vector& lengthscales, Matrix& out);
/// t_k = sum_{i,j} w(i,j) * kmat(i,j) * (a(i,k) - a(j,k))^2 / l_k^2, the
/// contraction of w with dK/d(log l_k).
Vector ard_se_lengthscale_traces(const Matrix& a, const Matrix& kmat, const Matrix& w, const Vector& lengthscales);

// ---- ReLU MLP ------------------------------------------------------------

/// Forward pass over the columns of `inputs` (in x B); returns out x B.
Matrix mlp_forward(const MlpShape& shape, std::span<const double> params, const Matrix& inputs);

/// Mean over columns of the heteroscedastic Gaussian NLL, summed over the
/// n_out = out/2 heads: rows [0, n_out) are means and rows [n_out, 2 n_out)
/// raw variances mapped through softplus. targets is n_out x B. When `grad`
/// is non-null it receives dLoss/dparams (resized to n_params).
double mlp_nll(const MlpShape& shape, std::span<const double> params, const Matrix& inputs, const Matrix& targets,
               Vector* grad);

namespace reference {

void ard_se_cross(const Matrix& a, const Matrix& b, double sigma2, const Vector& lengthscales, Matrix& out);
void ard_se_gram(const Matrix& a, double sigma2, const Vector& lengthscales, Matrix& out);
Vector ard_se_lengthscale_traces(const Matrix& a, const Matrix& kmat, const Matrix& w, const Vector& lengthscales);
Matrix mlp_forward(const MlpShape& shape, std::span<const double> params, const Matrix& inputs);
double mlp_nll(const MlpShape& shape, std::span<const double> params, const Matrix& inputs, const Matrix& targets,
               Vector* grad);

}  // namespace reference
}  // namespace cvgp::kernels
