#include "cvgp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "textio.hpp"

namespace cvgp {

namespace {

constexpr double kMorletFreqLo = 2.0;
constexpr double kMorletFreqHi = 50.0;
constexpr int kMorletCyclesLo = 2;
constexpr int kMorletCyclesHi = 5;

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

PhysicalGrid PhysicalGrid::from_points(Matrix points) {
  PhysicalGrid g;
  if (points.rows() > 0) {
    g.box_lo = points.colwise().minCoeff().transpose();
    g.box_hi = points.colwise().maxCoeff().transpose();
  }
  g.points = std::move(points);
  return g;
}

PhysicalGrid PhysicalGrid::uniform_1d(double lo, double hi, Index n_intervals) {
  if (n_intervals < 1) throw ValidationError("uniform grid needs at least one interval");
  Matrix pts(n_intervals + 1, 1);
  for (Index i = 0; i <= n_intervals; ++i) {
    // exact endpoints and an exact 0 at the midpoint for symmetric ranges
    pts(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_intervals);
  }
  if (lo == -hi && n_intervals % 2 == 0) pts(n_intervals / 2, 0) = 0.0;
  PhysicalGrid g;
  g.points = std::move(pts);
  g.box_lo = Vector::Constant(1, lo);
  g.box_hi = Vector::Constant(1, hi);
  return g;
}

void PhysicalGrid::validate() const {
  if (points.rows() < 1 || points.cols() < 1) throw ValidationError("grid must have M >= 1 points of dimension m >= 1");
  require_dims(box_lo.size() == points.cols() && box_hi.size() == points.cols(),
               "grid bounding box dimension does not match point dimension");
  if (!all_finite(points)) throw ValidationError("grid contains non-finite coordinates");
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < points.cols(); ++j) {
      if (points(i, j) < box_lo(j) || points(i, j) > box_hi(j)) {
        throw ValidationError("grid point outside the declared bounding box");
      }
    }
  }
}

ParameterSet ParameterSet::from_samples(Matrix samples) {
  ParameterSet p;
  if (samples.rows() > 0) {
    p.lower = samples.colwise().minCoeff().transpose();
    p.upper = samples.colwise().maxCoeff().transpose();
  } else {
    p.lower = Vector::Zero(samples.cols());
    p.upper = Vector::Zero(samples.cols());
  }
  p.integer_valued.assign(static_cast<std::size_t>(samples.cols()), false);
  p.samples = std::move(samples);
  return p;
}

ParameterSet ParameterSet::rows(const std::vector<Index>& idx) const {
  ParameterSet out = *this;
  out.samples.resize(static_cast<Index>(idx.size()), samples.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.samples.row(static_cast<Index>(r)) = samples.row(idx[r]);
  return out;
}

void ParameterSet::validate() const {
  require_dims(lower.size() == samples.cols() && upper.size() == samples.cols() &&
                   static_cast<Index>(integer_valued.size()) == samples.cols(),
               "parameter bounds do not match parameter dimension");
  if (!all_finite(samples)) throw ValidationError("parameter samples contain non-finite values");
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index j = 0; j < samples.cols(); ++j) {
      double v = samples(i, j);
      if (v < lower(j) || v > upper(j)) throw ValidationError("parameter sample outside its bounds");
      if (integer_valued[static_cast<std::size_t>(j)] && v != std::round(v)) {
        throw ValidationError("integer-valued parameter holds a non-integral value");
      }
    }
  }
}

void SnapshotSet::validate() const {
  grid.validate();
  params.validate();
  require_dims(values.rows() == params.size(), "snapshot row count differs from parameter count");
  require_dims(values.cols() == grid.size(), "snapshot column count differs from grid size");
  if (!all_finite(values)) throw ValidationError("snapshot values contain non-finite entries");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be nonnegative");
}

double morlet_eval(double x, double f, double n) {
  if (!std::isfinite(x) || !std::isfinite(f) || !std::isfinite(n)) {
    throw ValidationError("morlet_eval: non-finite input");
  }
  if (!(f > 0.0)) throw ValidationError("morlet_eval: frequency must be positive");
  if (!(n >= 1.0)) throw ValidationError("morlet_eval: cycle count must be >= 1");
  const double two_pi = 2.0 * std::numbers::pi;
  const double h = n / (two_pi * f);
  return std::cos(two_pi * f * x) * std::exp(-x * x / (2.0 * h * h));
}

SnapshotSet morlet_on_grid(const ParameterSet& params, const PhysicalGrid& grid) {
  require_dims(params.dim() == 2, "Morlet parameters are (f, n)");
  require_dims(grid.dim() == 1, "Morlet grid is one-dimensional");
  SnapshotSet s;
  s.grid = grid;
  s.params = params;
  s.values.resize(params.size(), grid.size());
  for (Index i = 0; i < params.size(); ++i) {
    const double f = params.samples(i, 0);
    const double n = params.samples(i, 1);
    for (Index p = 0; p < grid.size(); ++p) s.values(i, p) = morlet_eval(grid.points(p, 0), f, n);
  }
  return s;
}

SnapshotSet generate_morlet_set(Index D, Index grid_M, std::uint64_t seed) {
  if (D < 1) throw ValidationError("generate_morlet_set: D must be >= 1");
  if (grid_M < 2) throw ValidationError("generate_morlet_set: grid_M must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(kMorletFreqLo, kMorletFreqHi);
  std::uniform_int_distribution<int> cycles(kMorletCyclesLo, kMorletCyclesHi);

  Matrix xi(D, 2);
  for (Index i = 0; i < D; ++i) {
    xi(i, 0) = freq(rng);
    xi(i, 1) = cycles(rng);
  }
  ParameterSet params;
  params.samples = std::move(xi);
  params.lower = Eigen::Vector2d(kMorletFreqLo, kMorletCyclesLo);
  params.upper = Eigen::Vector2d(kMorletFreqHi, kMorletCyclesHi);
  params.integer_valued = {false, true};
  return morlet_on_grid(params, PhysicalGrid::uniform_1d(-1.0, 1.0, grid_M));
}

SnapshotSet add_noise(const SnapshotSet& s, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("add_noise: sigma must be finite and >= 0");
  SnapshotSet out = s;
  out.noise_sigma = sigma;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  // row-major traversal so the draw order matches the file layout
  for (Index i = 0; i < out.values.rows(); ++i) {
    for (Index j = 0; j < out.values.cols(); ++j) out.values(i, j) += normal(rng);
  }
  return out;
}

std::pair<SnapshotSet, SnapshotSet> split(const SnapshotSet& s, Index n_train, std::uint64_t seed) {
  const Index D = s.n_snapshots();
  if (n_train <= 0 || n_train >= D) throw ValidationError("split: n_train must satisfy 0 < n_train < D");
  std::vector<Index> idx(static_cast<std::size_t>(D));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Index> tr(idx.begin(), idx.begin() + n_train);
  std::vector<Index> te(idx.begin() + n_train, idx.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());

  auto take = [&](const std::vector<Index>& rows) {
    SnapshotSet part;
    part.grid = s.grid;
    part.params = s.params.rows(rows);
    part.noise_sigma = s.noise_sigma;
    part.values.resize(static_cast<Index>(rows.size()), s.values.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) part.values.row(static_cast<Index>(r)) = s.values.row(rows[r]);
    return part;
  };
  return {take(tr), take(te)};
}

std::filesystem::path grid_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".grid";
  return p;
}

void write_snapshots(const SnapshotSet& s, const std::filesystem::path& path) {
  require_dims(s.values.rows() == s.params.size() && s.values.cols() == s.grid.size(),
               "write_snapshots: inconsistent snapshot set");
  if (!s.values.allFinite()) throw ValidationError("write_snapshots: non-finite entries");
  using textio::fmt;
  {
    auto out = textio::open_out(path.string());
    out << s.n_snapshots() << ' ' << s.n_points() << ' ' << s.params.dim() << ' ' << s.grid.dim() << ' '
        << fmt(s.noise_sigma) << '\n';
    std::string line;
    for (Index i = 0; i < s.n_snapshots(); ++i) {
      line.clear();
      for (Index j = 0; j < s.params.dim(); ++j) {
        if (!line.empty()) line += ' ';
        line += fmt(s.params.samples(i, j));
      }
      for (Index j = 0; j < s.n_points(); ++j) {
        if (!line.empty()) line += ' ';
        line += fmt(s.values(i, j));
      }
      out << line << '\n';
    }
    if (!out) throw RuntimeFailure("write_snapshots: I/O error on " + path.string());
  }
  auto gout = textio::open_out(grid_path(path).string());
  for (Index p = 0; p < s.grid.size(); ++p) {
    for (Index j = 0; j < s.grid.dim(); ++j) {
      if (j) gout << ' ';
      gout << fmt(s.grid.points(p, j));
    }
    gout << '\n';
  }
  if (!gout) throw RuntimeFailure("write_snapshots: I/O error on " + grid_path(path).string());
}

SnapshotSet read_snapshots(const std::filesystem::path& path) {
  const std::string ctx = path.string();
  auto in = textio::open_in(ctx);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(ctx + ": missing header");
  auto head = textio::split_ws(line);
  if (head.size() != 5) throw FormatError(ctx + ": header must be 'D M d m noise_sigma'");
  const auto D = textio::parse_int(head[0], ctx);
  const auto M = textio::parse_int(head[1], ctx);
  const auto d = textio::parse_int(head[2], ctx);
  const auto m = textio::parse_int(head[3], ctx);
  const double noise = textio::parse_finite(head[4], ctx);
  if (D < 1 || M < 1 || d < 1 || m < 1 || noise < 0.0) throw FormatError(ctx + ": invalid header values");

  Matrix xi(D, d);
  Matrix values(D, M);
  Index row = 0;
  while (std::getline(in, line)) {
    auto toks = textio::split_ws(line);
    if (toks.empty()) continue;
    if (row >= D) throw DimensionMismatch(ctx + ": more snapshot rows than the header declares");
    if (static_cast<std::int64_t>(toks.size()) != d + M) {
      throw DimensionMismatch(ctx + ": row " + std::to_string(row + 1) + " has " + std::to_string(toks.size()) +
                              " entries, header implies " + std::to_string(d + M));
    }
    for (Index j = 0; j < d; ++j) xi(row, j) = textio::parse_finite(toks[static_cast<std::size_t>(j)], ctx);
    for (Index j = 0; j < M; ++j) values(row, j) = textio::parse_finite(toks[static_cast<std::size_t>(d + j)], ctx);
    ++row;
  }
  if (row != D) throw DimensionMismatch(ctx + ": header declares " + std::to_string(D) + " rows, found " + std::to_string(row));

  const std::string gctx = grid_path(path).string();
  auto gin = textio::open_in(gctx);
  Matrix pts(M, m);
  Index gp = 0;
  while (std::getline(gin, line)) {
    auto toks = textio::split_ws(line);
    if (toks.empty()) continue;
    if (gp >= M) throw DimensionMismatch(gctx + ": more grid points than M");
    if (static_cast<std::int64_t>(toks.size()) != m) throw DimensionMismatch(gctx + ": grid point dimension differs from m");
    for (Index j = 0; j < m; ++j) pts(gp, j) = textio::parse_finite(toks[static_cast<std::size_t>(j)], gctx);
    ++gp;
  }
  if (gp != M) throw DimensionMismatch(gctx + ": grid has " + std::to_string(gp) + " points, header declares " + std::to_string(M));

  SnapshotSet s;
  s.grid = PhysicalGrid::from_points(std::move(pts));
  s.params = ParameterSet::from_samples(std::move(xi));
  s.values = std::move(values);
  s.noise_sigma = noise;
  return s;
}

}  // namespace cvgp
