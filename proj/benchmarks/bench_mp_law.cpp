#include <benchmark/benchmark.h>

#include "biwhiten/mp_law.hpp"

using namespace biwhiten;

static void BM_MpCdf(benchmark::State& state) {
  const MpLaw law(0.5, 1.0);
  double tau = law.beta_minus() + 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mp_cdf(law, tau));
    tau += 1e-6;
    if (tau > law.beta_plus()) tau = law.beta_minus() + 1e-3;
  }
}
BENCHMARK(BM_MpCdf);

static void BM_MpMedian(benchmark::State& state) {
  const MpLaw law(0.5, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(mp_median(law));
}
BENCHMARK(BM_MpMedian)->Unit(benchmark::kMicrosecond);

static void BM_KsDistance(benchmark::State& state) {
  const MpLaw law(0.5, 1.0);
  const Index m = state.range(0);
  std::vector<double> eigs(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i)
    eigs[static_cast<std::size_t>(i)] =
        law.beta_minus() +
        (law.beta_plus() - law.beta_minus()) * static_cast<double>(m - i) / (m + 1.0);
  const Esd esd(eigs, m, 2 * m);
  for (auto _ : state) benchmark::DoNotOptimize(ks_distance(esd, law));
}
BENCHMARK(BM_KsDistance)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
