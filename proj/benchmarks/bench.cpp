#include <benchmark/benchmark.h>

#include <random>

#include "jlse/inference.hpp"
#include "jlse/numkit.hpp"
#include "jlse/synth.hpp"
#include "jlse/training.hpp"
#include "jlse/w_solver.hpp"

using namespace jlse;

namespace {

Vec normal_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (double& x : v) x = g(rng);
  return v;
}

SynthData bench_data(std::size_t samples) {
  SynthSpec spec;
  spec.samples_per_class = samples;
  return synth_generate(spec);
}

TrainConfig bench_config() {
  TrainConfig cfg;
  cfg.source_latent = 6;
  cfg.source_init = SourceInit::kKMeans;
  return cfg;
}

void BM_ProjectSimplex(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Vec v = normal_vec(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(project_simplex(v));
}
BENCHMARK(BM_ProjectSimplex)->Arg(6)->Arg(64)->Arg(1024);

void BM_SolveW(benchmark::State& state) {
  const SynthData d = bench_data(static_cast<std::size_t>(state.range(0)));
  const FitResult fit = fit_simplified(d.source, d.target, [] {
    TrainConfig cfg = bench_config();
    cfg.max_outer_iterations = 2;
    return cfg;
  }());
  const auto labels = pair_labels(d.source.labels, d.target.labels);
  const PairCodes pairs = cross_pairs(fit.codes, labels);
  for (auto _ : state) benchmark::DoNotOptimize(solve_w(pairs, 3e-4));
  state.counters["pairs"] = static_cast<double>(pairs.size());
}
BENCHMARK(BM_SolveW)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_FitSimplified(benchmark::State& state) {
  const SynthData d = bench_data(20);
  TrainConfig cfg = bench_config();
  cfg.max_outer_iterations = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_simplified(d.source, d.target, cfg));
}
BENCHMARK(BM_FitSimplified)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EstimateUnseen(benchmark::State& state) {
  const SynthData d = bench_data(20);
  TrainConfig cfg = bench_config();
  cfg.max_outer_iterations = 5;
  const FitResult fit = fit_simplified(d.source, d.target, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_unseen_embeddings(d.source, d.target.x, fit.params, fit.codes));
}
BENCHMARK(BM_EstimateUnseen)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
