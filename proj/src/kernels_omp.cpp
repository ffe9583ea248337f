#include <numbers>
#include <string>

#include "cvgp/kernels.hpp"

namespace cvgp::kernels {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;
using MutMap = Eigen::Map<Matrix>;
using MutVecMap = Eigen::Map<Vector>;

void check_shape(const MlpShape& shape, std::span<const double> params, Index input_rows) {
  require_dims(shape.widths.size() >= 2, "MLP shape needs at least input and output widths");
  require_dims(static_cast<Index>(params.size()) == shape.n_params(), "MLP parameter count does not match shape");
  require_dims(input_rows == shape.input_dim(), "MLP input has " + std::to_string(input_rows) + " rows, expected " +
                                                    std::to_string(shape.input_dim()));
}

struct ChunkResult {
  double loss = 0.0;
  Vector grad;
};

// Forward (+ optional backward) over one block of columns.
ChunkResult nll_chunk(const MlpShape& shape, std::span<const double> params, const Matrix& inputs,
                      const Matrix& targets, Index col0, Index cols, double inv_batch, bool want_grad) {
  const Index L = shape.n_layers();
  std::vector<Matrix> acts(static_cast<std::size_t>(L));
  acts[0] = inputs.middleCols(col0, cols);
  Matrix z;
  for (Index l = 0; l < L; ++l) {
    ConstMap W(params.data() + shape.weight_offset(l), shape.widths[l + 1], shape.widths[l]);
    ConstVecMap b(params.data() + shape.bias_offset(l), shape.widths[l + 1]);
    z.noalias() = W * acts[static_cast<std::size_t>(l)];
    z.colwise() += b;
    if (l + 1 < L) {
      acts[static_cast<std::size_t>(l + 1)] = z.cwiseMax(0.0);
    }
  }

  const Index n_out = shape.output_dim() / 2;
  ChunkResult res;
  Matrix g(shape.output_dim(), cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index h = 0; h < n_out; ++h) {
      const double mu = z(h, c);
      const double raw = z(n_out + h, c);
      const double var = softplus(raw);
      const double r = targets(h, col0 + c) - mu;
      res.loss += 0.5 * (r * r / var + std::log(2.0 * std::numbers::pi * var));
      g(h, c) = -r / var * inv_batch;
      g(n_out + h, c) = 0.5 * (1.0 / var - r * r / (var * var)) * sigmoid(raw) * inv_batch;
    }
  }
  if (!want_grad) return res;

  res.grad = Vector::Zero(shape.n_params());
  Matrix prev;
  for (Index l = L - 1; l >= 0; --l) {
    const auto& a = acts[static_cast<std::size_t>(l)];
    MutMap gW(res.grad.data() + shape.weight_offset(l), shape.widths[l + 1], shape.widths[l]);
    MutVecMap gb(res.grad.data() + shape.bias_offset(l), shape.widths[l + 1]);
    gW.noalias() = g * a.transpose();
    gb = g.rowwise().sum();
    if (l > 0) {
      ConstMap W(params.data() + shape.weight_offset(l), shape.widths[l + 1], shape.widths[l]);
      prev.noalias() = W.transpose() * g;
      g = prev.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
  }
  return res;
}

}  // namespace

Index MlpShape::n_params() const {
  Index n = 0;
  for (Index l = 0; l < n_layers(); ++l) n += widths[l + 1] * (widths[l] + 1);
  return n;
}

Index MlpShape::weight_offset(Index layer) const {
  Index off = 0;
  for (Index l = 0; l < layer; ++l) off += widths[l + 1] * (widths[l] + 1);
  return off;
}

double gaussian_nll(double u, double mu, double var) {
  const double r = u - mu;
  return 0.5 * (r * r / var + std::log(2.0 * std::numbers::pi * var));
}

void ard_se_cross(const Matrix& a, const Matrix& b, double sigma2, const Vector& lengthscales, Matrix& out) {
  require_dims(a.cols() == b.cols() && a.cols() == lengthscales.size(), "ARD-SE input dimension mismatch");
  const Index n = a.rows();
  const Index m = b.rows();
  const Index d = a.cols();
  const Vector inv = lengthscales.cwiseInverse();
  const Matrix as = a * inv.asDiagonal();
  const Matrix bs = b * inv.asDiagonal();
  out.resize(n, m);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double t = as(i, k) - bs(j, k);
        s += t * t;
      }
      out(i, j) = sigma2 * std::exp(-0.5 * s);
    }
  }
}

void ard_se_gram(const Matrix& a, double sigma2, const Vector& lengthscales, Matrix& out) {
  require_dims(a.cols() == lengthscales.size(), "ARD-SE input dimension mismatch");
  const Index n = a.rows();
  const Index d = a.cols();
  const Matrix as = a * lengthscales.cwiseInverse().asDiagonal();
  out.resize(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Index j = 0; j < n; ++j) {
    out(j, j) = sigma2;
    for (Index i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double t = as(i, k) - as(j, k);
        s += t * t;
      }
      out(i, j) = sigma2 * std::exp(-0.5 * s);
    }
  }
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
}

Vector ard_se_lengthscale_traces(const Matrix& a, const Matrix& kmat, const Matrix& w, const Vector& lengthscales) {
  const Index n = a.rows();
  const Index d = a.cols();
  require_dims(kmat.rows() == n && kmat.cols() == n && w.rows() == n && w.cols() == n && lengthscales.size() == d,
               "lengthscale trace dimension mismatch");
  const Matrix as = a * lengthscales.cwiseInverse().asDiagonal();
  // one partial row per column j, summed afterwards in column order
  Matrix partial = Matrix::Zero(d, n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double wk = w(i, j) * kmat(i, j);
      for (Index k = 0; k < d; ++k) {
        const double t = as(i, k) - as(j, k);
        partial(k, j) += wk * t * t;
      }
    }
  }
  Vector out = Vector::Zero(d);
  for (Index j = 0; j < n; ++j) out += partial.col(j);
  return out;
}

Matrix mlp_forward(const MlpShape& shape, std::span<const double> params, const Matrix& inputs) {
  check_shape(shape, params, inputs.rows());
  const Index B = inputs.cols();
  const Index L = shape.n_layers();
  Matrix out(shape.output_dim(), B);
  const Index n_chunks = (B + kMlpChunk - 1) / kMlpChunk;
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < n_chunks; ++c) {
    const Index col0 = c * kMlpChunk;
    const Index cols = std::min(kMlpChunk, B - col0);
    Matrix a = inputs.middleCols(col0, cols);
    Matrix z;
    for (Index l = 0; l < L; ++l) {
      ConstMap W(params.data() + shape.weight_offset(l), shape.widths[l + 1], shape.widths[l]);
      ConstVecMap b(params.data() + shape.bias_offset(l), shape.widths[l + 1]);
      z.noalias() = W * a;
      z.colwise() += b;
      if (l + 1 < L) a = z.cwiseMax(0.0);
    }
    out.middleCols(col0, cols) = z;
  }
  return out;
}

double mlp_nll(const MlpShape& shape, std::span<const double> params, const Matrix& inputs, const Matrix& targets,
               Vector* grad) {
  check_shape(shape, params, inputs.rows());
  require_dims(shape.output_dim() % 2 == 0, "heteroscedastic head needs an even output width");
  require_dims(targets.rows() == shape.output_dim() / 2 && targets.cols() == inputs.cols(),
               "NLL targets do not match the output heads / batch size");
  const Index B = inputs.cols();
  if (B < 1) throw ValidationError("mlp_nll: empty batch");
  const double inv_batch = 1.0 / static_cast<double>(B);
  const Index n_chunks = (B + kMlpChunk - 1) / kMlpChunk;
  std::vector<ChunkResult> parts(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < n_chunks; ++c) {
    const Index col0 = c * kMlpChunk;
    const Index cols = std::min(kMlpChunk, B - col0);
    parts[static_cast<std::size_t>(c)] = nll_chunk(shape, params, inputs, targets, col0, cols, inv_batch, grad != nullptr);
  }
  double loss = 0.0;
  for (const auto& p : parts) loss += p.loss;
  if (grad) {
    *grad = std::move(parts[0].grad);
    for (std::size_t c = 1; c < parts.size(); ++c) *grad += parts[c].grad;
  }
  return loss * inv_batch;
}

}  // namespace cvgp::kernels
