#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace carbonshift {

// Worldwide average grid carbon intensity, g CO2eq/kWh.
inline constexpr double default_global_average_ci = 368.39;

// Percent saved against the baseline; baseline must be positive.
double relative_savings(double baseline, double shifted);

// Per-hour absolute savings expressed as a percent of the global average.
double relative_to_global(double absolute_per_hour, double global_avg = default_global_average_ci);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

// Mean and population std of a series, in one pass over stored values.
MeanStd mean_std(const std::vector<double>& values);

using Labels = std::map<std::string, std::string>;

struct SavingsReport {
  Labels labels;
  double relative_pct = 0.0;
  double absolute = 0.0;  // g CO2eq/kWh, per-hour normalized
  double relative_to_global_pct = 0.0;
};

struct AggregatedReport {
  Labels group;
  std::size_t count = 0;
  MeanStd relative_pct;
  MeanStd absolute;
  MeanStd relative_to_global_pct;
};

// Groups reports by the given label keys (a missing label counts as the empty
// string) and reduces each metric to mean and population std. Groups come
// back in lexicographic key order.
std::vector<AggregatedReport> aggregate(const std::vector<SavingsReport>& reports,
                                        const std::vector<std::string>& group_by);

// One row per group: the group labels, count, then mean/std per metric.
std::string to_csv(const std::vector<AggregatedReport>& reports,
                   const std::vector<std::string>& group_by);

// Same content as the CSV, nested object per group key.
std::string to_json(const std::vector<AggregatedReport>& reports,
                    const std::vector<std::string>& group_by);

}  // namespace carbonshift
