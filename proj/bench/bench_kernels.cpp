// OpenMP kernels vs the single-threaded reference loops.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "cvgp/kernels.hpp"

namespace {

using cvgp::Index;
using cvgp::Matrix;
using cvgp::Vector;

Matrix random_matrix(Index r, Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

cvgp::kernels::MlpShape default_shape() { return {{13, 100, 100, 100, 100, 2}}; }

Vector random_params(const cvgp::kernels::MlpShape& s) {
  Matrix p = random_matrix(s.n_params(), 1, 7) * 0.1;
  return p.col(0);
}

template <bool Omp>
void BM_ArdSeGram(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = random_matrix(n, 2, 1);
  const Vector l = Vector::Constant(2, 0.7);
  Matrix k;
  for (auto _ : state) {
    if constexpr (Omp) cvgp::kernels::ard_se_gram(a, 1.3, l, k);
    else cvgp::kernels::reference::ard_se_gram(a, 1.3, l, k);
    benchmark::DoNotOptimize(k.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Omp>
void BM_LengthscaleTraces(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix a = random_matrix(n, 2, 2);
  const Vector l = Vector::Constant(2, 0.7);
  Matrix k;
  cvgp::kernels::ard_se_gram(a, 1.0, l, k);
  const Matrix w = random_matrix(n, n, 3);
  for (auto _ : state) {
    Vector t = Omp ? cvgp::kernels::ard_se_lengthscale_traces(a, k, w, l)
                   : cvgp::kernels::reference::ard_se_lengthscale_traces(a, k, w, l);
    benchmark::DoNotOptimize(t.data());
  }
}

template <bool Omp>
void BM_MlpForward(benchmark::State& state) {
  const auto shape = default_shape();
  const Vector pv = random_params(shape);
  const std::span<const double> p(pv.data(), static_cast<std::size_t>(pv.size()));
  const Matrix x = random_matrix(13, state.range(0), 4);
  for (auto _ : state) {
    Matrix y = Omp ? cvgp::kernels::mlp_forward(shape, p, x) : cvgp::kernels::reference::mlp_forward(shape, p, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_MlpNllGrad(benchmark::State& state) {
  const auto shape = default_shape();
  const Vector pv = random_params(shape);
  const std::span<const double> p(pv.data(), static_cast<std::size_t>(pv.size()));
  const Matrix x = random_matrix(13, state.range(0), 5);
  const Matrix u = random_matrix(1, state.range(0), 6);
  Vector g;
  for (auto _ : state) {
    double v = Omp ? cvgp::kernels::mlp_nll(shape, p, x, u, &g) : cvgp::kernels::reference::mlp_nll(shape, p, x, u, &g);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ArdSeGram<true>)->Arg(100)->Arg(500);
BENCHMARK(BM_ArdSeGram<false>)->Arg(100)->Arg(500);
BENCHMARK(BM_LengthscaleTraces<true>)->Arg(500);
BENCHMARK(BM_LengthscaleTraces<false>)->Arg(500);
BENCHMARK(BM_MlpForward<true>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_MlpForward<false>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_MlpNllGrad<true>)->Arg(1000);
BENCHMARK(BM_MlpNllGrad<false>)->Arg(1000);

BENCHMARK_MAIN();
