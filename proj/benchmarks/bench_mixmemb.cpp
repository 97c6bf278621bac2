#include <benchmark/benchmark.h>

#include "mixmemb/eval.hpp"
#include "mixmemb/geonmf.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/spectral.hpp"

using namespace mixmemb;

namespace {

MMSBParams simulation_params(int n, int k, Rng& rng) {
  Eigen::VectorXd beta(k);
  for (int a = 0; a < k; ++a) beta(a) = 0.6 + 0.4 * a / std::max(1, k - 1);
  MMSBParams p;
  p.k = k;
  p.theta = sample_theta(n, k, 1.0, rng);
  p.b = beta.asDiagonal();
  p.rho = 1.0;
  return p;
}

SparseMatrix sampled_graph(int n, int k, std::uint64_t seed) {
  Rng rng(seed);
  const MMSBParams params = simulation_params(n, k, rng);
  const ProbabilityMatrix p = build_probability_matrix(params);
  return sample_adjacency(p, rng, true).to_sparse();
}

void bm_sample_adjacency(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const MMSBParams params = simulation_params(n, 3, rng);
  const ProbabilityMatrix p = build_probability_matrix(params);
  for (auto _ : state) {
    Rng draw(2);
    benchmark::DoNotOptimize(sample_adjacency(p, draw, true));
  }
}
BENCHMARK(bm_sample_adjacency)->Arg(500)->Arg(1000)->Arg(2000);

void bm_top_k_eigs_dense(benchmark::State& state) {
  const SparseMatrix a = sampled_graph(static_cast<int>(state.range(0)), 3, 3);
  EigOptions opts;
  opts.dense_threshold = 1 << 20;
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_k_eigs(a, 3, opts));
  }
}
BENCHMARK(bm_top_k_eigs_dense)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void bm_top_k_eigs_lanczos(benchmark::State& state) {
  const SparseMatrix a = sampled_graph(static_cast<int>(state.range(0)), 3, 3);
  EigOptions opts;
  opts.dense_threshold = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_k_eigs(a, 3, opts));
  }
}
BENCHMARK(bm_top_k_eigs_lanczos)
    ->Arg(500)
    ->Arg(1000)
    ->Arg(2000)
    ->Arg(4000)
    ->Unit(benchmark::kMillisecond);

void bm_fit(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SparseMatrix a = sampled_graph(n, 3, 4);
  FitOptions opts;
  opts.split = false;
  opts.eig.dense_threshold = 0;
  for (auto _ : state) {
    Rng rng(5);
    benchmark::DoNotOptimize(fit(a, 3, opts, rng));
  }
}
BENCHMARK(bm_fit)->Arg(500)->Arg(1000)->Arg(2000)->Arg(4000)->Unit(
    benchmark::kMillisecond);

void bm_fit_split(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SparseMatrix a = sampled_graph(n, 3, 4);
  FitOptions opts;
  opts.eig.dense_threshold = 0;
  for (auto _ : state) {
    Rng rng(5);
    benchmark::DoNotOptimize(fit(a, 3, opts, rng));
  }
}
BENCHMARK(bm_fit_split)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

void bm_munkres(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Rng rng(6);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd cost(k, k);
  for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = unif(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(munkres(cost));
  }
}
BENCHMARK(bm_munkres)->Arg(3)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
