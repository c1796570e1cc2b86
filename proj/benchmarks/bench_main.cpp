#include <benchmark/benchmark.h>

#include "htband/ensemble.hpp"
#include "htband/heavy_tail.hpp"
#include "htband/linalg.hpp"
#include "htband/spectral.hpp"
#include "htband/truncation.hpp"

using namespace htband;

namespace {

const TailLaw kLaw = TailLaw::pareto(1.0);

void BM_SampleMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = build_pattern(n, 1.0, PatternKind::cyclic_band);
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_matrix(p, kLaw, 1, r++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n / 2));
}
BENCHMARK(BM_SampleMatrix)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_DenseEigh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = sample_matrix(build_pattern(n, 1.0, PatternKind::cyclic_band), kLaw, 2, 0);
  const auto d = m.to_dense();
  for (auto _ : state) benchmark::DoNotOptimize(dense_eigh(d, false));
}
BENCHMARK(BM_DenseEigh)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_LanczosTop(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = sample_matrix(build_pattern(n, 0.7, PatternKind::cyclic_band), kLaw, 3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(lanczos_topk(m, 5, Which::largest_magnitude));
}
BENCHMARK(BM_LanczosTop)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_TracePower(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = sample_matrix(build_pattern(n, 1.0, PatternKind::cyclic_band),
                               TailLaw::pareto(5.0, 1.0, true, true), 4, 0);
  const auto d = m.to_dense();
  for (auto _ : state) benchmark::DoNotOptimize(trace_power(d, 3));
}
BENCHMARK(BM_TracePower)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
