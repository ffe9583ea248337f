// Serial plain-loop versions of the kernels. Slow; kept for testing.

#include <numbers>

#include "cvgp/kernels.hpp"

namespace cvgp::kernels::reference {

namespace {

double se(const Matrix& a, Index i, const Matrix& b, Index j, double sigma2, const Vector& l) {
  double s = 0.0;
  for (Index k = 0; k < a.cols(); ++k) {
    const double t = (a(i, k) - b(j, k)) / l(k);
    s += t * t;
  }
  return sigma2 * std::exp(-0.5 * s);
}

double w_at(std::span<const double> p, const MlpShape& shape, Index l, Index row, Index col) {
  return p[static_cast<std::size_t>(shape.weight_offset(l) + col * shape.widths[l + 1] + row)];
}

double b_at(std::span<const double> p, const MlpShape& shape, Index l, Index row) {
  return p[static_cast<std::size_t>(shape.bias_offset(l) + row)];
}

// Pre-activations of every layer for one input column.
std::vector<std::vector<double>> forward_one(const MlpShape& shape, std::span<const double> p, const Matrix& x,
                                             Index col, std::vector<std::vector<double>>& acts) {
  const Index L = shape.n_layers();
  acts.assign(static_cast<std::size_t>(L), {});
  std::vector<std::vector<double>> pre(static_cast<std::size_t>(L));
  acts[0].resize(static_cast<std::size_t>(shape.widths[0]));
  for (Index i = 0; i < shape.widths[0]; ++i) acts[0][static_cast<std::size_t>(i)] = x(i, col);
  for (Index l = 0; l < L; ++l) {
    auto& z = pre[static_cast<std::size_t>(l)];
    z.assign(static_cast<std::size_t>(shape.widths[l + 1]), 0.0);
    for (Index r = 0; r < shape.widths[l + 1]; ++r) {
      double s = b_at(p, shape, l, r);
      for (Index c = 0; c < shape.widths[l]; ++c) s += w_at(p, shape, l, r, c) * acts[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = s;
    }
    if (l + 1 < L) {
      auto& a = acts[static_cast<std::size_t>(l + 1)];
      a.resize(z.size());
      for (std::size_t r = 0; r < z.size(); ++r) a[r] = z[r] > 0.0 ? z[r] : 0.0;
    }
  }
  return pre;
}

}  // namespace

void ard_se_cross(const Matrix& a, const Matrix& b, double sigma2, const Vector& lengthscales, Matrix& out) {
  require_dims(a.cols() == b.cols() && a.cols() == lengthscales.size(), "ARD-SE input dimension mismatch");
  out.resize(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = se(a, i, b, j, sigma2, lengthscales);
}

void ard_se_gram(const Matrix& a, double sigma2, const Vector& lengthscales, Matrix& out) {
  ard_se_cross(a, a, sigma2, lengthscales, out);
}

Vector ard_se_lengthscale_traces(const Matrix& a, const Matrix& kmat, const Matrix& w, const Vector& lengthscales) {
  Vector out = Vector::Zero(a.cols());
  for (Index k = 0; k < a.cols(); ++k) {
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.rows(); ++j) {
        const double t = (a(i, k) - a(j, k)) / lengthscales(k);
        out(k) += w(i, j) * kmat(i, j) * t * t;
      }
    }
  }
  return out;
}

Matrix mlp_forward(const MlpShape& shape, std::span<const double> params, const Matrix& inputs) {
  require_dims(static_cast<Index>(params.size()) == shape.n_params() && inputs.rows() == shape.input_dim(),
               "MLP dimension mismatch");
  Matrix out(shape.output_dim(), inputs.cols());
  std::vector<std::vector<double>> acts;
  for (Index c = 0; c < inputs.cols(); ++c) {
    auto pre = forward_one(shape, params, inputs, c, acts);
    for (Index r = 0; r < shape.output_dim(); ++r) out(r, c) = pre.back()[static_cast<std::size_t>(r)];
  }
  return out;
}

double mlp_nll(const MlpShape& shape, std::span<const double> params, const Matrix& inputs, const Matrix& targets,
               Vector* grad) {
  require_dims(static_cast<Index>(params.size()) == shape.n_params() && inputs.rows() == shape.input_dim(),
               "MLP dimension mismatch");
  const Index n_out = shape.output_dim() / 2;
  require_dims(targets.rows() == n_out && targets.cols() == inputs.cols(), "NLL target dimension mismatch");
  const Index B = inputs.cols();
  if (B < 1) throw ValidationError("mlp_nll: empty batch");
  const Index L = shape.n_layers();
  if (grad) *grad = Vector::Zero(shape.n_params());

  double loss = 0.0;
  std::vector<std::vector<double>> acts;
  for (Index c = 0; c < B; ++c) {
    auto pre = forward_one(shape, params, inputs, c, acts);
    const auto& out = pre.back();
    std::vector<double> delta(out.size());
    for (Index h = 0; h < n_out; ++h) {
      const double mu = out[static_cast<std::size_t>(h)];
      const double raw = out[static_cast<std::size_t>(n_out + h)];
      const double var = softplus(raw);
      const double u = targets(h, c);
      loss += gaussian_nll(u, mu, var);
      const double r = u - mu;
      delta[static_cast<std::size_t>(h)] = -r / var / static_cast<double>(B);
      delta[static_cast<std::size_t>(n_out + h)] =
          0.5 * (1.0 / var - r * r / (var * var)) * sigmoid(raw) / static_cast<double>(B);
    }
    if (!grad) continue;
    for (Index l = L - 1; l >= 0; --l) {
      const auto& a = acts[static_cast<std::size_t>(l)];
      for (Index r = 0; r < shape.widths[l + 1]; ++r) {
        const double dr = delta[static_cast<std::size_t>(r)];
        (*grad)(shape.bias_offset(l) + r) += dr;
        for (Index cc = 0; cc < shape.widths[l]; ++cc) {
          (*grad)(shape.weight_offset(l) + cc * shape.widths[l + 1] + r) += dr * a[static_cast<std::size_t>(cc)];
        }
      }
      if (l == 0) break;
      std::vector<double> next(static_cast<std::size_t>(shape.widths[l]), 0.0);
      const auto& zprev = pre[static_cast<std::size_t>(l - 1)];
      for (Index cc = 0; cc < shape.widths[l]; ++cc) {
        if (zprev[static_cast<std::size_t>(cc)] <= 0.0) continue;
        double s = 0.0;
        for (Index r = 0; r < shape.widths[l + 1]; ++r) s += w_at(params, shape, l, r, cc) * delta[static_cast<std::size_t>(r)];
        next[static_cast<std::size_t>(cc)] = s;
      }
      delta = std::move(next);
    }
  }
  return loss / static_cast<double>(B);
}

}  // namespace cvgp::kernels::reference
