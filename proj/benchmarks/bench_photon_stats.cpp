#include <benchmark/benchmark.h>

#include "mpmwg/photon_stats.hpp"

using namespace mpmwg;

namespace {

SourceDetectionSpec spec(double rate_hz) {
  SourceDetectionSpec s;
  s.pair_rate_hz = rate_hz;
  s.duration_s = 0.1;
  s.channel_efficiencies = {0.2};
  s.dark_rates_hz = {100.0};
  s.timing_jitter_sigma_ps = {40.0};
  s.rng_seed = 3;
  return s;
}

void BM_Simulate(benchmark::State& state) {
  const auto s = spec(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_timetags(s));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * s.pair_rate_hz * s.duration_s));
}
BENCHMARK(BM_Simulate)->Arg(1'000'000)->Arg(10'000'000)->Unit(benchmark::kMillisecond);

void BM_Histogram(benchmark::State& state) {
  const auto stream = simulate_timetags(spec(static_cast<double>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(coincidence_histogram(stream, 0, 1, 100.0, 1e6));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * stream.tags.size()));
}
BENCHMARK(BM_Histogram)->Arg(1'000'000)->Arg(10'000'000)->Unit(benchmark::kMillisecond);

void BM_AnalyzeThreeDetector(benchmark::State& state) {
  auto s = spec(5e6);
  s.layout = SplitterLayout::three_detector;
  const auto stream = simulate_timetags(s);
  for (auto _ : state) benchmark::DoNotOptimize(analyze_stream(stream, 1000.0, 100.0, 1e5));
}
BENCHMARK(BM_AnalyzeThreeDetector)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
