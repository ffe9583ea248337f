#pragma once

#include "cvgp/dataset.hpp"

namespace cvgp {

/// Truncated POD of a snapshot matrix.
struct PodBasis {
  Vector mean_row;     // length M
  Matrix basis;        // M x k, orthonormal columns
  Vector eigenvalues;  // length M, nonincreasing, >= 0
  Index k = 0;

  Index n_points() const { return mean_row.size(); }

  /// Relative squared projection error sum_{i>r} lambda_i / sum_i lambda_i.
  double truncation_error(Index r) const;
  /// Copy restricted to the leading r modes (r <= k).
  PodBasis truncated(Index r) const;
};

/// D x k projection coefficients.
struct LatentCoords {
  Matrix coords;
};

/// Fits the spectrum and keeps the smallest k with E_k <= eps_pod^2 (k >= 1).
PodBasis fit_pod(const SnapshotSet& s, double eps_pod);
PodBasis fit_pod_fixed_k(const SnapshotSet& s, Index k);

LatentCoords project(const PodBasis& b, const SnapshotSet& s);
LatentCoords project(const PodBasis& b, const Matrix& values);
/// Rows mean_row + basis * z_i.
Matrix reconstruct(const PodBasis& b, const LatentCoords& z);

}  // namespace cvgp
