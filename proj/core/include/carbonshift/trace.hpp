#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "carbonshift/io.hpp"

namespace carbonshift {

// Half-open slot interval [begin, end).
struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

// One region's hourly carbon intensity, g CO2eq/kWh, gap-free.
struct CarbonTrace {
  std::string region_id;
  EpochHour start_hour = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  SlotRange full_range() const { return {0, values.size()}; }
};

struct TraceLoadOptions {
  // Longest run of missing hours repaired by linear interpolation; anything
  // longer rejects the trace.
  int max_gap_hours = 3;
};

// Reads the canonical CSV (header "timestamp,region_id,carbon_intensity"),
// keeping rows whose region matches. Timestamps must be strictly increasing
// per region; values must be finite and non-negative.
CarbonTrace load_trace(std::istream& in, const std::string& region_id,
                       const TraceLoadOptions& options = {});
CarbonTrace load_trace_file(const std::filesystem::path& path, const std::string& region_id,
                            const TraceLoadOptions& options = {});

// Loads every region found in the *.csv files of a directory, sorted by
// region id. A region must not be split across files.
std::vector<CarbonTrace> load_traces_dir(const std::filesystem::path& dir,
                                         const TraceLoadOptions& options = {});

std::string trace_to_csv(const CarbonTrace& trace);

struct TraceStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double cv = 0.0;   // std / mean, 0 when mean is 0
  double min = 0.0;
  double max = 0.0;
};

TraceStats compute_stats(const CarbonTrace& trace, std::optional<SlotRange> window = {});

// Mean of per-day CVs over the complete 24 h days inside the window.
double mean_daily_cv(const CarbonTrace& trace, std::optional<SlotRange> window = {});

enum class Level { low, high };
const char* to_string(Level level);

// Position relative to cross-region averages; ties land in low.
struct QuadrantLabel {
  Level ci_class = Level::low;
  Level cv_class = Level::low;
};
QuadrantLabel classify_quadrant(const TraceStats& stats, double avg_ci, double avg_cv);

struct PeriodicityEntry {
  int period_hours = 0;
  double score = 0.0;  // [0, 1], 1 = perfectly periodic at this fundamental period
};

// Scores each candidate period by circular autocorrelation after removing the
// seasonal profile of every shorter candidate that divides it, so a pure 24 h
// cycle does not also light up 168 h. Entries come back sorted by score
// descending, period ascending on ties. Needs at least two full cycles of the
// largest candidate.
std::vector<PeriodicityEntry> detect_periodicity(const CarbonTrace& trace,
                                                 const std::vector<int>& candidate_periods = {24, 168});

enum class TrendClass { improved, worsened, insignificant };
const char* to_string(TrendClass trend);

struct TrendThresholds {
  double mean_abs = 25.0;  // g CO2eq/kWh
  double cv_abs = 0.01;
};

// Significant iff either threshold is exceeded; then the sign of the mean
// change decides. A pure CV change with no mean movement stays insignificant.
TrendClass classify_trend(double delta_mean, double delta_cv, const TrendThresholds& t = {});

struct TrendDelta {
  std::string region_id;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double cv_a = 0.0;
  double cv_b = 0.0;
  double delta_mean = 0.0;  // b - a
  double delta_cv = 0.0;
  TrendClass cls = TrendClass::insignificant;
};

// Compares two observation periods of the same region, each at least 28 days.
TrendDelta trend_delta(const CarbonTrace& period_a, const CarbonTrace& period_b,
                       const TrendThresholds& t = {});

}  // namespace carbonshift
