#include <benchmark/benchmark.h>

#include "carbonshift/synthetic.hpp"
#include "carbonshift/temporal.hpp"

namespace {

carbonshift::CarbonTrace year_trace() {
  return carbonshift::synth_trace(carbonshift::world_regions()[5], 8760, 0, 7);
}

void bench_sweep_all_policies(benchmark::State& state) {
  const auto trace = year_trace();
  carbonshift::Job job;
  job.length_hours = static_cast<double>(state.range(0));
  job.slack = carbonshift::Slack::fixed(24.0);
  job.interruptible = true;
  for (auto _ : state) {
    auto sweep = carbonshift::sweep_all_policies(trace, job);
    benchmark::DoNotOptimize(sweep);
  }
}
BENCHMARK(bench_sweep_all_policies)->Arg(1)->Arg(24)->Arg(168);

void bench_schedule_interrupted(benchmark::State& state) {
  const auto trace = year_trace();
  carbonshift::Job job;
  job.length_hours = 24.5;
  job.slack = carbonshift::Slack::fixed(48.0);
  job.interruptible = true;
  job.arrival_slot = 4000;
  for (auto _ : state) {
    auto result = carbonshift::schedule_interrupted(trace, job);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(bench_schedule_interrupted);

}  // namespace

BENCHMARK_MAIN();
