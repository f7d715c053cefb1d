#include "carbonshift/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace carbonshift {

const char* to_string(SchedulePolicy policy) {
  switch (policy) {
    case SchedulePolicy::baseline: return "baseline";
    case SchedulePolicy::deferred: return "deferred";
    case SchedulePolicy::interrupted: return "interrupted";
  }
  return "baseline";
}

namespace {

struct WindowSpec {
  std::size_t arrival = 0;
  std::size_t full = 0;   // whole-hour slots at weight 1
  double frac = 0.0;      // weight of the tail slot, 0 when the length is whole
  std::size_t span = 0;   // slots the job occupies
  std::size_t window = 0; // decision window, clipped to the trace end
};

std::size_t slack_slot_count(const CarbonTrace& trace, const Job& job) {
  const double s = std::floor(job.slack_hours());
  if (s >= static_cast<double>(trace.size())) return trace.size();
  return static_cast<std::size_t>(s);
}

WindowSpec make_window(const CarbonTrace& trace, const Job& job) {
  validate_job(job);
  const JobSlots slots = job_slots(job.length_hours);
  WindowSpec w;
  w.arrival = job.arrival_slot;
  w.full = slots.full_slots;
  w.frac = slots.frac;
  w.span = slots.full_slots + (slots.frac > 0.0 ? 1 : 0);
  if (w.arrival >= trace.size() || w.arrival + w.span > trace.size())
    throw std::invalid_argument("job of " + format_double(job.length_hours) + " h at arrival slot " +
                                std::to_string(w.arrival) + " does not fit a trace of " +
                                std::to_string(trace.size()) + " slots");
  w.window = std::min(trace.size() - w.arrival, w.span + slack_slot_count(trace, job));
  return w;
}

// Emissions of a contiguous run starting at `start`, summed in slot order.
double run_emissions(const std::vector<double>& v, std::size_t start, std::size_t full, double frac) {
  double e = 0.0;
  for (std::size_t i = 0; i < full; ++i) e += v[start + i];
  if (frac > 0.0) e += frac * v[start + full];
  return e;
}

ScheduleResult contiguous_result(const WindowSpec& w, const std::vector<double>& v,
                                 std::size_t start, SchedulePolicy policy) {
  ScheduleResult r;
  r.policy = policy;
  r.slots.reserve(w.span);
  for (std::size_t i = 0; i < w.full; ++i) r.slots.push_back({start + i, 1.0});
  if (w.frac > 0.0) r.slots.push_back({start + w.full, w.frac});
  r.emissions = run_emissions(v, start, w.full, w.frac);
  return r;
}

using ValueSlot = std::pair<double, std::size_t>;

// Picks the cheapest `span` slots of [first, first + window) with the tail on
// the most expensive pick, then orders them by slot. scratch is reused.
ScheduleResult cheapest_slots_result(const WindowSpec& w, const std::vector<double>& v,
                                     std::vector<ValueSlot>& scratch) {
  scratch.clear();
  for (std::size_t i = 0; i < w.window; ++i) scratch.push_back({v[w.arrival + i], w.arrival + i});
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(w.span) - 1,
                   scratch.end());
  std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(w.span));

  ScheduleResult r;
  r.policy = SchedulePolicy::interrupted;
  r.slots.reserve(w.span);
  for (std::size_t i = 0; i < w.span; ++i) {
    const bool tail = w.frac > 0.0 && i + 1 == w.span;
    r.slots.push_back({scratch[i].second, tail ? w.frac : 1.0});
  }
  std::sort(r.slots.begin(), r.slots.end(),
            [](const ScheduleResult::Slot& a, const ScheduleResult::Slot& b) { return a.index < b.index; });
  for (const auto& slot : r.slots) r.emissions += slot.weight * v[slot.index];
  return r;
}

}  // namespace

ScheduleResult schedule_baseline(const CarbonTrace& trace, const Job& job) {
  const WindowSpec w = make_window(trace, job);
  return contiguous_result(w, trace.values, w.arrival, SchedulePolicy::baseline);
}

ScheduleResult schedule_deferred(const CarbonTrace& trace, const Job& job) {
  const WindowSpec w = make_window(trace, job);
  const auto& v = trace.values;
  std::size_t best_start = w.arrival;
  double best = run_emissions(v, w.arrival, w.full, w.frac);
  for (std::size_t d = 1; d + w.span <= w.window; ++d) {
    const double e = run_emissions(v, w.arrival + d, w.full, w.frac);
    if (e < best) {
      best = e;
      best_start = w.arrival + d;
    }
  }
  return contiguous_result(w, v, best_start, SchedulePolicy::deferred);
}

ScheduleResult schedule_interrupted(const CarbonTrace& trace, const Job& job) {
  if (!job.interruptible)
    throw std::invalid_argument("schedule_interrupted needs an interruptible job");
  const WindowSpec w = make_window(trace, job);
  std::vector<ValueSlot> scratch;
  return cheapest_slots_result(w, trace.values, scratch);
}

namespace {

struct SweepVectors {
  std::size_t arrivals = 0;
  std::vector<double> rel_def, abs_def;
  std::vector<double> rel_int, abs_int;
  std::vector<double> rel_extra, abs_extra;
};

// Shared arrival loop. The interrupted policy is evaluated on the job as if
// interruptible; sweeps model a fleet, not one submission.
SweepVectors sweep_core(const CarbonTrace& trace, const Job& job, bool want_deferred,
                        bool want_interrupted) {
  validate_job(job);
  const JobSlots slots = job_slots(job.length_hours);
  const std::size_t full = slots.full_slots;
  const double frac = slots.frac;
  const std::size_t span = full + (frac > 0.0 ? 1 : 0);
  const std::size_t slack = slack_slot_count(trace, job);
  const std::size_t need = span + slack;
  const std::size_t n = trace.size();
  if (n < need)
    throw std::invalid_argument("no arrival fits: trace has " + std::to_string(n) +
                                " slots, the job window needs " + std::to_string(need));

  SweepVectors out;
  out.arrivals = n - need + 1;
  const auto& v = trace.values;
  std::vector<ValueSlot> scratch;
  scratch.reserve(need);

  for (std::size_t a = 0; a < out.arrivals; ++a) {
    double window_sum = 0.0;
    for (std::size_t i = 0; i < full; ++i) window_sum += v[a + i];
    const double baseline = window_sum + (frac > 0.0 ? frac * v[a + full] : 0.0);

    double deferred = baseline;
    if (want_deferred) {
      double s = window_sum;
      for (std::size_t d = 1; d <= slack; ++d) {
        s += v[a + d - 1 + full] - v[a + d - 1];
        const double e = s + (frac > 0.0 ? frac * v[a + d + full] : 0.0);
        deferred = std::min(deferred, e);
      }
    }

    double interrupted = baseline;
    if (want_interrupted) {
      scratch.clear();
      for (std::size_t i = 0; i < need; ++i) scratch.push_back({v[a + i], a + i});
      const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(span);
      std::nth_element(scratch.begin(), mid - 1, scratch.end());
      std::sort(scratch.begin(), mid);
      const std::size_t tail_slot = scratch[span - 1].second;  // most expensive pick takes frac
      std::sort(scratch.begin(), mid,
                [](const ValueSlot& x, const ValueSlot& y) { return x.second < y.second; });
      interrupted = 0.0;
      for (std::size_t i = 0; i < span; ++i) {
        const double weight = frac > 0.0 && scratch[i].second == tail_slot ? frac : 1.0;
        interrupted += weight * scratch[i].first;
      }
    }

    const double len = job.length_hours;
    const auto rel = [&](double e) { return baseline > 0.0 ? 100.0 * (baseline - e) / baseline : 0.0; };
    if (want_deferred) {
      out.rel_def.push_back(rel(deferred));
      out.abs_def.push_back((baseline - deferred) / len);
    }
    if (want_interrupted) {
      out.rel_int.push_back(rel(interrupted));
      out.abs_int.push_back((baseline - interrupted) / len);
    }
    if (want_deferred && want_interrupted) {
      out.rel_extra.push_back(rel(interrupted) - rel(deferred));
      out.abs_extra.push_back((deferred - interrupted) / len);
    }
  }
  return out;
}

}  // namespace

SweepResult sweep_arrivals(const CarbonTrace& trace, const Job& job_template, SchedulePolicy policy) {
  SweepResult r;
  if (policy == SchedulePolicy::baseline) {
    const SweepVectors v = sweep_core(trace, job_template, false, false);
    r.arrivals = v.arrivals;
    r.series.relative_pct = {0.0, 0.0};
    r.series.absolute_per_hour = {0.0, 0.0};
    return r;
  }
  const bool deferred = policy == SchedulePolicy::deferred;
  const SweepVectors v = sweep_core(trace, job_template, deferred, !deferred);
  r.arrivals = v.arrivals;
  r.series.relative_pct = mean_std(deferred ? v.rel_def : v.rel_int);
  r.series.absolute_per_hour = mean_std(deferred ? v.abs_def : v.abs_int);
  return r;
}

PolicySweep sweep_all_policies(const CarbonTrace& trace, const Job& job_template) {
  const SweepVectors v = sweep_core(trace, job_template, true, true);
  PolicySweep p;
  p.arrivals = v.arrivals;
  p.deferred = {mean_std(v.rel_def), mean_std(v.abs_def)};
  p.interrupted = {mean_std(v.rel_int), mean_std(v.abs_int)};
  p.extra = {mean_std(v.rel_extra), mean_std(v.abs_extra)};
  return p;
}

}  // namespace carbonshift
