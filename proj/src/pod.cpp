#include "cvgp/pod.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cvgp {

namespace {

constexpr double kEigenClip = 1e-12;

// Full spectrum and all right singular vectors of the centered snapshots.
PodBasis decompose(const SnapshotSet& s) {
  const Index D = s.n_snapshots();
  const Index M = s.n_points();
  if (D < 2) throw ValidationError("fit_pod: need at least two snapshots");
  if (!s.values.allFinite()) throw ValidationError("fit_pod: non-finite snapshot values");

  PodBasis b;
  b.mean_row = s.values.colwise().mean().transpose();
  Matrix centered = s.values.rowwise() - b.mean_row.transpose();

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const Index r = sv.size();  // min(D, M)

  b.eigenvalues = Vector::Zero(M);
  for (Index i = 0; i < r; ++i) {
    double lam = sv(i) * sv(i) / static_cast<double>(D);
    b.eigenvalues(i) = lam < kEigenClip ? 0.0 : lam;
  }
  if (b.eigenvalues.sum() <= 0.0) {
    throw DegenerateData("fit_pod: snapshots have zero total variance (all rows identical)");
  }

  b.basis = svd.matrixV();  // M x r
  for (Index j = 0; j < b.basis.cols(); ++j) {
    Index imax = 0;
    b.basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (b.basis(imax, j) < 0.0) b.basis.col(j) *= -1.0;
  }
  b.k = r;
  return b;
}

}  // namespace

double PodBasis::truncation_error(Index r) const {
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 0.0;
  r = std::clamp<Index>(r, 0, eigenvalues.size());
  return eigenvalues.tail(eigenvalues.size() - r).sum() / total;
}

PodBasis PodBasis::truncated(Index r) const {
  if (r < 1 || r > k) throw ValidationError("PodBasis::truncated: rank " + std::to_string(r) + " outside [1, " + std::to_string(k) + "]");
  PodBasis out;
  out.mean_row = mean_row;
  out.basis = basis.leftCols(r);
  out.eigenvalues = eigenvalues;
  out.k = r;
  return out;
}

PodBasis fit_pod(const SnapshotSet& s, double eps_pod) {
  if (!(eps_pod > 0.0 && eps_pod <= 1.0)) throw ValidationError("fit_pod: eps_pod must lie in (0, 1]");
  PodBasis full = decompose(s);
  const double tol = eps_pod * eps_pod;
  Index k = 1;
  while (k < full.k && full.truncation_error(k) > tol) ++k;
  return full.truncated(k);
}

PodBasis fit_pod_fixed_k(const SnapshotSet& s, Index k) {
  const Index limit = std::min(s.n_snapshots(), s.n_points());
  if (k < 1 || k > limit) {
    throw ValidationError("fit_pod_fixed_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
  }
  return decompose(s).truncated(k);
}

LatentCoords project(const PodBasis& b, const Matrix& values) {
  require_dims(values.cols() == b.n_points(), "project: snapshot length " + std::to_string(values.cols()) +
                                                  " differs from basis length " + std::to_string(b.n_points()));
  // one product per mode keeps each coordinate independent of the rank
  const Matrix centered = values.rowwise() - b.mean_row.transpose();
  LatentCoords z;
  z.coords.resize(values.rows(), b.k);
  for (Index j = 0; j < b.k; ++j) z.coords.col(j).noalias() = centered * b.basis.col(j);
  return z;
}

LatentCoords project(const PodBasis& b, const SnapshotSet& s) { return project(b, s.values); }

Matrix reconstruct(const PodBasis& b, const LatentCoords& z) {
  require_dims(z.coords.cols() == b.k, "reconstruct: latent width " + std::to_string(z.coords.cols()) +
                                           " differs from basis rank " + std::to_string(b.k));
  Matrix out = z.coords * b.basis.transpose();
  out.rowwise() += b.mean_row.transpose();
  return out;
}

}  // namespace cvgp
