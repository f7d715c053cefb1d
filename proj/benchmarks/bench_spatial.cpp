#include <benchmark/benchmark.h>

#include "carbonshift/spatial.hpp"
#include "carbonshift/synthetic.hpp"

namespace {

void bench_infinite_migration(benchmark::State& state) {
  const auto catalog = carbonshift::make_world_catalog(8760, 42);
  const auto& ids = catalog.region_ids();
  for (auto _ : state) {
    auto plan = carbonshift::plan_infinite_migration(catalog, ids.front(), ids, catalog.full_range());
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(bench_infinite_migration);

void bench_savings_matrix(benchmark::State& state) {
  const auto catalog = carbonshift::make_world_catalog(8760, 42);
  for (auto _ : state) {
    auto matrix = carbonshift::savings_matrix(catalog, catalog.region_ids(), catalog.full_range());
    benchmark::DoNotOptimize(matrix);
  }
}
BENCHMARK(bench_savings_matrix);

}  // namespace

BENCHMARK_MAIN();
