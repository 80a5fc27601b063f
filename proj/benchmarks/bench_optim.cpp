#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "govid/optim.hpp"

namespace {

double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

govid::SearchSpace box(std::size_t dim) {
  govid::SearchSpace s;
  s.lower.assign(dim, -5.12);
  s.upper.assign(dim, 5.12);
  return s;
}

void run(benchmark::State& state, govid::Algorithm alg) {
  govid::OptimizerConfig cfg;
  cfg.algorithm = alg;
  cfg.run().max_generations = 100;
  cfg.run().stop_threshold = 0.0;
  const auto space = box(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.run().seed = seed++;
    benchmark::DoNotOptimize(govid::run_optimizer(cfg, rastrigin, space));
  }
}

void BM_CuckooSearch(benchmark::State& state) { run(state, govid::Algorithm::CS); }
void BM_Genetic(benchmark::State& state) { run(state, govid::Algorithm::GA); }
void BM_Swarm(benchmark::State& state) { run(state, govid::Algorithm::PSO); }
BENCHMARK(BM_CuckooSearch)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Genetic)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Swarm)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_LevyStep(benchmark::State& state) {
  const auto space = box(8);
  std::vector<double> x(8, 0.0), scale(8, 0.1);
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(govid::levy_step(x, 1.0, 1.5, scale, space, rng));
}
BENCHMARK(BM_LevyStep);

}  // namespace
