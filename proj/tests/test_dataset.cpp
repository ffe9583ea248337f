#include <cmath>
#include <fstream>
#include <set>

#include "cvgp/dataset.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cvgp;

TEST_CASE("morlet_eval closed form") {
  CHECK(morlet_eval(0.0, 2.0, 2.0) == 1.0);
  CHECK(morlet_eval(0.0, 30.0, 5.0) == 1.0);
  // -exp(-pi^2/8), evaluated with 40-digit arithmetic
  CHECK(morlet_eval(0.25, 2.0, 2.0) == doctest::Approx(-0.29121293321402086607).epsilon(1e-14));
  for (double x : {0.1, 0.37, 0.9})
    for (double f : {2.0, 17.5, 50.0})
      for (double n : {2.0, 3.0, 5.0}) CHECK(morlet_eval(-x, f, n) == morlet_eval(x, f, n));
}

TEST_CASE("morlet_eval rejects bad input") {
  CHECK_THROWS_AS(morlet_eval(NAN, 2.0, 2.0), ValidationError);
  CHECK_THROWS_AS(morlet_eval(0.1, INFINITY, 2.0), ValidationError);
  CHECK_THROWS_AS(morlet_eval(0.1, 0.0, 2.0), ValidationError);
  CHECK_THROWS_AS(morlet_eval(0.1, 2.0, 0.5), ValidationError);
}

TEST_CASE("generate_morlet_set shape, ranges, determinism") {
  auto s = generate_morlet_set(1000, 500, 11);
  CHECK(s.values.rows() == 1000);
  CHECK(s.values.cols() == 501);
  CHECK(s.grid.points(0, 0) == -1.0);
  CHECK(s.grid.points(500, 0) == 1.0);
  CHECK(s.grid.points(250, 0) == 0.0);
  s.validate();
  std::set<double> cycles;
  for (Index i = 0; i < s.n_snapshots(); ++i) {
    CHECK(s.params.samples(i, 0) >= 2.0);
    CHECK(s.params.samples(i, 0) <= 50.0);
    cycles.insert(s.params.samples(i, 1));
  }
  CHECK(cycles == std::set<double>{2.0, 3.0, 4.0, 5.0});

  auto tiny = generate_morlet_set(1, 2, 3);
  CHECK(tiny.values.cols() == 3);
  CHECK(tiny.values(0, 1) == 1.0);

  auto a = generate_morlet_set(2, 4, 99);
  auto b = generate_morlet_set(2, 4, 99);
  CHECK(a.values == b.values);
  CHECK(a.params.samples == b.params.samples);

  CHECK_THROWS_AS(generate_morlet_set(0, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_morlet_set(2, 1, 1), ValidationError);
}

TEST_CASE("add_noise statistics and identity") {
  auto s = generate_morlet_set(200, 500, 5);  // 100200 entries
  auto same = add_noise(s, 0.0, 1);
  CHECK(same.values == s.values);
  CHECK(same.noise_sigma == 0.0);

  auto noisy = add_noise(s, 0.1, 7);
  CHECK(noisy.noise_sigma == 0.1);
  const Matrix e = noisy.values - s.values;
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / static_cast<double>(e.size() - 1));
  CHECK(std::abs(sd - 0.1) < 0.005);
  CHECK(add_noise(s, 0.1, 7).values == noisy.values);
  CHECK_THROWS_AS(add_noise(s, -0.1, 1), ValidationError);
}

TEST_CASE("split is a partition") {
  auto s = generate_morlet_set(1000, 10, 2);
  auto [tr, te] = split(s, 500, 4);
  CHECK(tr.n_snapshots() == 500);
  CHECK(te.n_snapshots() == 500);
  CHECK(tr.grid.points == s.grid.points);
  CHECK(te.grid.points == s.grid.points);

  std::multiset<std::pair<double, double>> all, parts;
  for (Index i = 0; i < s.n_snapshots(); ++i) all.insert({s.params.samples(i, 0), s.params.samples(i, 1)});
  for (const auto* p : {&tr, &te})
    for (Index i = 0; i < p->n_snapshots(); ++i) parts.insert({p->params.samples(i, 0), p->params.samples(i, 1)});
  CHECK(all == parts);

  auto two = generate_morlet_set(2, 4, 1);
  auto [a, b] = split(two, 1, 0);
  CHECK(a.n_snapshots() == 1);
  CHECK(b.n_snapshots() == 1);
  CHECK_THROWS_AS(split(two, 0, 0), ValidationError);
  CHECK_THROWS_AS(split(two, 2, 0), ValidationError);
}

TEST_CASE("snapshot file round trip is exact") {
  testutil::TempDir dir("dataset");
  auto s = add_noise(generate_morlet_set(7, 20, 3), 0.013, 8);
  s.values(0, 0) = 1e-300;
  s.values(1, 1) = -3.0e17;
  write_snapshots(s, dir / "a.snap");
  auto r = read_snapshots(dir / "a.snap");
  CHECK(r.values == s.values);
  CHECK(r.params.samples == s.params.samples);
  CHECK(r.grid.points == s.grid.points);
  CHECK(r.noise_sigma == s.noise_sigma);
}

TEST_CASE("snapshot reader errors") {
  testutil::TempDir dir("dataset_err");
  auto s = generate_morlet_set(3, 4, 3);
  write_snapshots(s, dir / "ok.snap");

  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    std::filesystem::copy_file(grid_path(dir / "ok.snap"), grid_path(dir / name));
    return dir / name;
  };
  // header says M=5 but rows carry 2 + 4 entries
  CHECK_THROWS_AS(read_snapshots(write("m.snap", "1 4 2 1 0\n1 2 3 4 5\n")), DimensionMismatch);
  CHECK_THROWS_AS(read_snapshots(write("rows.snap", "2 5 2 1 0\n1 2 1 1 1 1 1\n")), DimensionMismatch);
  CHECK_THROWS_AS(read_snapshots(write("hdr.snap", "2 5 2\n")), FormatError);
  CHECK_THROWS_AS(read_snapshots(write("nan.snap", "1 5 2 1 0\n1 2 1 nan 1 1 1\n")), FormatError);
  CHECK_THROWS_AS(read_snapshots(write("txt.snap", "1 5 2 1 0\n1 2 1 x 1 1 1\n")), FormatError);
  CHECK_THROWS_AS(read_snapshots(dir / "missing.snap"), ValidationError);
}

TEST_CASE("cavity layout: 51x51 grid, D=200") {
  testutil::TempDir dir("cavity");
  Matrix pts(2601, 2);
  for (Index i = 0; i < 51; ++i)
    for (Index j = 0; j < 51; ++j) pts(i * 51 + j, 0) = i / 50.0, pts(i * 51 + j, 1) = j / 50.0;
  SnapshotSet s;
  s.grid = PhysicalGrid::from_points(pts);
  s.params = ParameterSet::from_samples(testutil::randn(200, 1, 3).array().abs() * 100.0 + 100.0);
  s.values = testutil::randn(200, 2601, 4);
  s.validate();
  write_snapshots(s, dir / "cavity.snap");
  auto r = read_snapshots(dir / "cavity.snap");
  CHECK(r.n_snapshots() == 200);
  CHECK(r.n_points() == 2601);
  CHECK(r.grid.dim() == 2);
  CHECK(r.values == s.values);
}
