#include <benchmark/benchmark.h>

#include "biwhiten/scaling.hpp"
#include "biwhiten/simgen.hpp"

using namespace biwhiten;

static DenseMatrix poisson_counts(Index m, Index n) {
  const SignalSpec spec = SignalSpec::full_rank_uniform(m, n);
  return sample_counts(gen_signal(spec, 7), NoiseFamily::poisson(), 7);
}

static void BM_SinkhornScale(benchmark::State& state) {
  const Index n = state.range(0);
  const Index m = n / 2;
  const DenseMatrix Y = poisson_counts(m, n);
  for (auto _ : state) {
    auto f = scaling_factors_from_variances(Y);
    benchmark::DoNotOptimize(f.residual);
  }
}
BENCHMARK(BM_SinkhornScale)->Arg(200)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Diagnose(benchmark::State& state) {
  const Index n = state.range(0);
  const DenseMatrix Y = poisson_counts(n / 2, n);
  for (auto _ : state) {
    auto d = diagnose(Y);
    benchmark::DoNotOptimize(d.blocks.size());
  }
}
BENCHMARK(BM_Diagnose)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
