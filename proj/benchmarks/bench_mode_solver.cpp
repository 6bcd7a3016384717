#include <benchmark/benchmark.h>

#include "mpmwg/geometry.hpp"
#include "mpmwg/mode_solver.hpp"
#include "mpmwg/nonlinear_coupling.hpp"

using namespace mpmwg;

namespace {

void BM_Rasterize(benchmark::State& state) {
  const WaveguideGeometry g;
  const RasterOptions opt{.spacing_nm = static_cast<double>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(g, 1.53, opt));
}
BENCHMARK(BM_Rasterize)->Arg(20)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SolveSignalTe00(benchmark::State& state) {
  const WaveguideGeometry g;
  const auto grid = rasterize(g, 1.53, {.spacing_nm = static_cast<double>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(solve_modes(grid, 1, g.core.refractive_index(1.53)));
  state.counters["unknowns"] = static_cast<double>(grid.shape.size());
}
BENCHMARK(BM_SolveSignalTe00)->Arg(20)->Arg(10)->Unit(benchmark::kSecond)->Iterations(1);

void BM_SolvePumpSet(benchmark::State& state) {
  const WaveguideGeometry g;
  const auto grid = rasterize(g, 0.765, {.spacing_nm = static_cast<double>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(solve_modes(grid, 4, 1.91));
}
BENCHMARK(BM_SolvePumpSet)->Arg(20)->Unit(benchmark::kSecond)->Iterations(1);

void BM_OverlapFactor(benchmark::State& state) {
  const WaveguideGeometry g;
  const auto sg = rasterize(g, 1.53, {.spacing_nm = 20.0});
  const auto pg = rasterize(g, 0.765, {.spacing_nm = 20.0});
  const auto s = solve_modes(sg, 1, g.core.refractive_index(1.53)).modes.front();
  const auto p = solve_modes(pg, 1, s.n_eff).modes.front();
  for (auto _ : state) benchmark::DoNotOptimize(overlap_factor(s, p, pg));
}
BENCHMARK(BM_OverlapFactor)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
