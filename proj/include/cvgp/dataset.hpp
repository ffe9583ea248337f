#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "cvgp/common.hpp"

namespace cvgp {

/// Discretization points of the physical region (M points in m dimensions).
struct PhysicalGrid {
  Matrix points;  // M x m
  Vector box_lo;
  Vector box_hi;

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }

  /// Builds a grid whose bounding box is the tight box around `points`.
  static PhysicalGrid from_points(Matrix points);
  /// n_intervals + 1 equispaced nodes on [lo, hi].
  static PhysicalGrid uniform_1d(double lo, double hi, Index n_intervals);
  void validate() const;
};

struct ParameterSet {
  Matrix samples;  // D x d
  Vector lower;
  Vector upper;
  std::vector<bool> integer_valued;

  Index size() const { return samples.rows(); }
  Index dim() const { return samples.cols(); }

  /// Bounds taken as the per-column min/max; no integer flags.
  static ParameterSet from_samples(Matrix samples);
  ParameterSet rows(const std::vector<Index>& idx) const;
  void validate() const;
};

struct SnapshotSet {
  PhysicalGrid grid;
  ParameterSet params;
  Matrix values;  // D x M
  double noise_sigma = 0.0;

  Index n_snapshots() const { return values.rows(); }
  Index n_points() const { return values.cols(); }
  void validate() const;
};

// Real Morlet wavelet cos(2 pi f x) exp(-x^2 / (2 h^2)), h = n / (2 pi f).
double morlet_eval(double x, double f, double n);

/// Morlet snapshots on [-1, 1] with grid_M intervals; f ~ U[2, 50], n ~ U{2..5}.
SnapshotSet generate_morlet_set(Index D, Index grid_M, std::uint64_t seed);

/// Evaluates the Morlet response for fixed parameters on another grid.
SnapshotSet morlet_on_grid(const ParameterSet& params, const PhysicalGrid& grid);

SnapshotSet add_noise(const SnapshotSet& s, double sigma, std::uint64_t seed);

std::pair<SnapshotSet, SnapshotSet> split(const SnapshotSet& s, Index n_train,
                                          std::uint64_t seed);

// Text format. `path` holds the header `D M d m noise_sigma` and one row per
// snapshot (d parameters then M values). The grid lives in grid_path(path).
std::filesystem::path grid_path(const std::filesystem::path& path);
void write_snapshots(const SnapshotSet& s, const std::filesystem::path& path);
SnapshotSet read_snapshots(const std::filesystem::path& path);

}  // namespace cvgp
