#pragma once

#include <cstddef>
#include <vector>

#include "carbonshift/metrics.hpp"
#include "carbonshift/trace.hpp"
#include "carbonshift/workload.hpp"

namespace carbonshift {

enum class SchedulePolicy { baseline, deferred, interrupted };
const char* to_string(SchedulePolicy policy);

// Slots a job runs in, ascending. Weights are 1 except for a fractional tail;
// they sum to the job length. Emissions assume unit power draw, so the unit
// is g CO2eq per kWh of a one-hour slot.
struct ScheduleResult {
  struct Slot {
    std::size_t index = 0;
    double weight = 1.0;
  };
  std::vector<Slot> slots;
  double emissions = 0.0;
  SchedulePolicy policy = SchedulePolicy::baseline;
};

// The decision window starts at the arrival slot and spans
// ceil(length) + floor(slack) slots, clipped to the end of the trace. The job
// itself must fit: arrival + ceil(length) <= trace size.
//
// baseline: run immediately.
// deferred: latest-regret-free contiguous start, i.e. the start offset within
//   the window with the smallest emissions, earliest on ties.
// interrupted: the cheapest slots anywhere in the window, fractional tail on
//   the next-cheapest slot; requires an interruptible job.
ScheduleResult schedule_baseline(const CarbonTrace& trace, const Job& job);
ScheduleResult schedule_deferred(const CarbonTrace& trace, const Job& job);
ScheduleResult schedule_interrupted(const CarbonTrace& trace, const Job& job);

struct SweepSeries {
  MeanStd relative_pct;       // savings vs the same-arrival baseline, percent
  MeanStd absolute_per_hour;  // (baseline - shifted) / job length
};

struct SweepResult {
  std::size_t arrivals = 0;
  SweepSeries series;
};

// Runs the policy at every arrival whose full window (job plus slack) fits in
// the trace, comparing each run against the baseline at the same arrival.
// Arrivals where the baseline emits nothing count as zero savings.
SweepResult sweep_arrivals(const CarbonTrace& trace, const Job& job_template, SchedulePolicy policy);

struct PolicySweep {
  std::size_t arrivals = 0;
  SweepSeries deferred;
  SweepSeries interrupted;
  SweepSeries extra;  // interrupted minus deferred, per arrival
};

// One pass over all arrivals for both shifting policies.
PolicySweep sweep_all_policies(const CarbonTrace& trace, const Job& job_template);

}  // namespace carbonshift
