#include <benchmark/benchmark.h>

#include "biwhiten/biwhiten.hpp"
#include "biwhiten/simgen.hpp"

using namespace biwhiten;

static void BM_Spectrum(benchmark::State& state) {
  const Index n = state.range(0);
  const SignalSpec spec = SignalSpec::full_rank_uniform(n / 2, n);
  const DenseMatrix Y = sample_counts(gen_signal(spec, 11), NoiseFamily::poisson(), 11);
  for (auto _ : state) {
    auto esd = spectrum(Y);
    benchmark::DoNotOptimize(esd.eigenvalues[0]);
  }
}
BENCHMARK(BM_Spectrum)->Arg(200)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_RankPipeline(benchmark::State& state) {
  const Index n = state.range(0);
  const SignalSpec spec = SignalSpec::low_rank(n * 3 / 10, n, 10, FactorDist::log_normal(2.0),
                                               FactorDist::uniform(0.0, 1.0));
  const DenseMatrix Y = sample_counts(gen_signal(spec, 3), NoiseFamily::poisson(), 3);
  for (auto _ : state) {
    auto report = run_pipeline(Y, QvfParams{0.0, 1.0, 0.0});
    benchmark::DoNotOptimize(report.rank);
  }
}
BENCHMARK(BM_RankPipeline)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);
