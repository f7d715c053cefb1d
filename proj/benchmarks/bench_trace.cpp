#include <sstream>

#include <benchmark/benchmark.h>

#include "carbonshift/synthetic.hpp"
#include "carbonshift/trace.hpp"

namespace {

void bench_load_trace(benchmark::State& state) {
  const auto trace = carbonshift::synth_trace(carbonshift::world_regions()[0], 8760, 0, 1);
  const std::string csv = carbonshift::trace_to_csv(trace);
  for (auto _ : state) {
    std::istringstream in(csv);
    auto loaded = carbonshift::load_trace(in, trace.region_id);
    benchmark::DoNotOptimize(loaded);
  }
}
BENCHMARK(bench_load_trace);

void bench_periodicity(benchmark::State& state) {
  const auto trace = carbonshift::synth_trace(carbonshift::world_regions()[5], 8760, 0, 9);
  for (auto _ : state) {
    auto entries = carbonshift::detect_periodicity(trace);
    benchmark::DoNotOptimize(entries);
  }
}
BENCHMARK(bench_periodicity);

}  // namespace

BENCHMARK_MAIN();
