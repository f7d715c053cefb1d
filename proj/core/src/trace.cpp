#include "carbonshift/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace carbonshift {

namespace {

struct RawRow {
  EpochHour hour;
  double value;
};

double parse_intensity(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw std::invalid_argument("line " + std::to_string(line_no) + ": bad carbon_intensity '" + field + "'");
  if (v < 0.0)
    throw std::invalid_argument("line " + std::to_string(line_no) + ": negative carbon_intensity " + field);
  return v;
}

// Parses the canonical CSV into per-region rows, keeping file order.
// only_region, when set, drops everything else early.
std::map<std::string, std::vector<RawRow>> parse_canonical_csv(std::istream& in,
                                                               const std::string* only_region) {
  std::map<std::string, std::vector<RawRow>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' && line[2] == '\xBF')
      line.erase(0, 3);
    auto fields = split_csv_line(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (!saw_header) {
      if (fields.size() != 3 || fields[0] != "timestamp" || fields[1] != "region_id" ||
          fields[2] != "carbon_intensity")
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": expected header 'timestamp,region_id,carbon_intensity'");
      saw_header = true;
      continue;
    }
    if (fields.size() != 3)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
    if (fields[1].empty())
      throw std::invalid_argument("line " + std::to_string(line_no) + ": empty region_id");
    if (only_region && fields[1] != *only_region) continue;
    EpochHour hour;
    try {
      hour = parse_utc_hour(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
    rows[fields[1]].push_back({hour, parse_intensity(fields[2], line_no)});
  }
  if (!saw_header) throw std::invalid_argument("empty input: missing CSV header");
  return rows;
}

CarbonTrace build_trace(const std::string& region_id, const std::vector<RawRow>& rows,
                        const TraceLoadOptions& options) {
  if (rows.empty()) throw std::invalid_argument("no rows for region '" + region_id + "'");
  if (options.max_gap_hours < 0) throw std::invalid_argument("max_gap_hours must be >= 0");

  CarbonTrace trace;
  trace.region_id = region_id;
  trace.start_hour = rows.front().hour;
  trace.values.reserve(rows.size());
  trace.values.push_back(rows.front().value);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const EpochHour prev = rows[i - 1].hour;
    const EpochHour cur = rows[i].hour;
    if (cur <= prev)
      throw std::invalid_argument("region '" + region_id + "': timestamps not strictly increasing at " +
                                  format_utc_hour(cur));
    const std::int64_t gap = cur - prev - 1;
    if (gap > options.max_gap_hours)
      throw std::invalid_argument("region '" + region_id + "': gap of " + std::to_string(gap) +
                                  " h after " + format_utc_hour(prev) + " exceeds max of " +
                                  std::to_string(options.max_gap_hours) + " h");
    const double v0 = rows[i - 1].value;
    const double v1 = rows[i].value;
    for (std::int64_t g = 1; g <= gap; ++g)
      trace.values.push_back(v0 + (v1 - v0) * static_cast<double>(g) / static_cast<double>(gap + 1));
    trace.values.push_back(v1);
  }
  return trace;
}

}  // namespace

CarbonTrace load_trace(std::istream& in, const std::string& region_id, const TraceLoadOptions& options) {
  if (region_id.empty()) throw std::invalid_argument("region_id must not be empty");
  auto rows = parse_canonical_csv(in, &region_id);
  auto it = rows.find(region_id);
  if (it == rows.end()) throw std::invalid_argument("no rows for region '" + region_id + "'");
  return build_trace(region_id, it->second, options);
}

CarbonTrace load_trace_file(const std::filesystem::path& path, const std::string& region_id,
                            const TraceLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return load_trace(in, region_id, options);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::vector<CarbonTrace> load_traces_dir(const std::filesystem::path& dir,
                                         const TraceLoadOptions& options) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::map<std::string, CarbonTrace> traces;
  std::map<std::string, std::string> origin_file;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::map<std::string, std::vector<RawRow>> rows;
    try {
      rows = parse_canonical_csv(in, nullptr);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(file.string() + ": " + e.what());
    }
    for (const auto& [region, region_rows] : rows) {
      if (auto it = origin_file.find(region); it != origin_file.end())
        throw std::invalid_argument("region '" + region + "' appears in both " + it->second +
                                    " and " + file.string());
      origin_file[region] = file.string();
      try {
        traces[region] = build_trace(region, region_rows, options);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(file.string() + ": " + e.what());
      }
    }
  }
  if (traces.empty()) throw std::runtime_error("no trace rows found under " + dir.string());

  std::vector<CarbonTrace> out;
  out.reserve(traces.size());
  for (auto& [region, trace] : traces) out.push_back(std::move(trace));
  return out;
}

std::string trace_to_csv(const CarbonTrace& trace) {
  if (trace.region_id.find(',') != std::string::npos)
    throw std::invalid_argument("region id '" + trace.region_id + "' contains a comma");
  std::string out = "timestamp,region_id,carbon_intensity\n";
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    out += format_utc_hour(trace.start_hour + static_cast<EpochHour>(i));
    out += ',';
    out += trace.region_id;
    out += ',';
    out += format_double(trace.values[i]);
    out += '\n';
  }
  return out;
}

namespace {

SlotRange checked_window(const CarbonTrace& trace, const std::optional<SlotRange>& window,
                         const char* what) {
  const SlotRange r = window.value_or(trace.full_range());
  if (r.begin >= r.end || r.end > trace.size())
    throw std::invalid_argument(std::string(what) + ": empty or out-of-range window [" +
                                std::to_string(r.begin) + ", " + std::to_string(r.end) + ") on " +
                                std::to_string(trace.size()) + " slots");
  return r;
}

}  // namespace

TraceStats compute_stats(const CarbonTrace& trace, std::optional<SlotRange> window) {
  const SlotRange r = checked_window(trace, window, "compute_stats");
  const std::size_t n = r.size();

  TraceStats s;
  s.min = trace.values[r.begin];
  s.max = trace.values[r.begin];
  double sum = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    const double v = trace.values[i];
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(n);

  double ss = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    const double d = trace.values[i] - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / static_cast<double>(n));
  s.cv = s.mean > 0.0 ? s.std / s.mean : 0.0;
  return s;
}

double mean_daily_cv(const CarbonTrace& trace, std::optional<SlotRange> window) {
  const SlotRange r = checked_window(trace, window, "mean_daily_cv");
  const std::size_t days = r.size() / 24;
  if (days == 0) throw std::invalid_argument("mean_daily_cv: window shorter than one day");
  double sum = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    const SlotRange day{r.begin + d * 24, r.begin + (d + 1) * 24};
    sum += compute_stats(trace, day).cv;
  }
  return sum / static_cast<double>(days);
}

const char* to_string(Level level) { return level == Level::low ? "low" : "high"; }

QuadrantLabel classify_quadrant(const TraceStats& stats, double avg_ci, double avg_cv) {
  if (!(avg_ci > 0.0)) throw std::invalid_argument("classify_quadrant: avg_ci must be positive");
  if (avg_cv < 0.0) throw std::invalid_argument("classify_quadrant: avg_cv must be non-negative");
  QuadrantLabel q;
  q.ci_class = stats.mean > avg_ci ? Level::high : Level::low;
  q.cv_class = stats.cv > avg_cv ? Level::high : Level::low;
  return q;
}

namespace {

// Subtracts the phase-mean profile of period p in place.
void remove_seasonal_profile(std::vector<double>& x, int p) {
  const std::size_t period = static_cast<std::size_t>(p);
  std::vector<double> profile(period, 0.0);
  std::vector<std::size_t> count(period, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    profile[t % period] += x[t];
    ++count[t % period];
  }
  for (std::size_t ph = 0; ph < period; ++ph)
    if (count[ph] > 0) profile[ph] /= static_cast<double>(count[ph]);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] -= profile[t % period];
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

std::vector<PeriodicityEntry> detect_periodicity(const CarbonTrace& trace,
                                                 const std::vector<int>& candidate_periods) {
  if (candidate_periods.empty()) throw std::invalid_argument("detect_periodicity: no candidate periods");
  std::vector<int> candidates = candidate_periods;
  std::sort(candidates.begin(), candidates.end());
  if (candidates.front() < 1) throw std::invalid_argument("detect_periodicity: periods must be >= 1 h");
  if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end())
    throw std::invalid_argument("detect_periodicity: duplicate candidate period");

  const std::size_t n = trace.size();
  const std::size_t max_period = static_cast<std::size_t>(candidates.back());
  if (n < 2 * max_period)
    throw std::invalid_argument("detect_periodicity: trace of " + std::to_string(n) +
                                " h is shorter than two cycles of " + std::to_string(max_period) + " h");

  const double mu = mean_of(trace.values);
  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = trace.values[t] - mu;

  // Constant traces score 0 everywhere.
  double total_var = 0.0;
  for (double v : centered) total_var += v * v;
  const double floor = 1e-12 * static_cast<double>(n) * std::max(1.0, mu * mu);
  const bool constant = total_var <= floor;

  std::vector<PeriodicityEntry> entries;
  entries.reserve(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    const int p = candidates[ci];
    double score = 0.0;
    if (!constant) {
      // Deflate every shorter candidate that divides p, so harmonics of an
      // already-explained cycle do not score.
      std::vector<double> residual = centered;
      for (std::size_t dj = 0; dj < ci; ++dj)
        if (p % candidates[dj] == 0) remove_seasonal_profile(residual, candidates[dj]);
      const double rmu = mean_of(residual);
      for (double& v : residual) v -= rmu;

      double den = 0.0;
      for (double v : residual) den += v * v;
      if (den > floor) {
        double num = 0.0;
        const std::size_t lag = static_cast<std::size_t>(p);
        for (std::size_t t = 0; t < n; ++t) num += residual[t] * residual[(t + lag) % n];
        score = std::clamp(num / den, 0.0, 1.0);
      }
    }
    entries.push_back({p, score});
  }

  std::sort(entries.begin(), entries.end(), [](const PeriodicityEntry& a, const PeriodicityEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.period_hours < b.period_hours;
  });
  return entries;
}

const char* to_string(TrendClass trend) {
  switch (trend) {
    case TrendClass::improved: return "improved";
    case TrendClass::worsened: return "worsened";
    case TrendClass::insignificant: return "insignificant";
  }
  return "insignificant";
}

TrendClass classify_trend(double delta_mean, double delta_cv, const TrendThresholds& t) {
  if (std::abs(delta_mean) <= t.mean_abs && std::abs(delta_cv) <= t.cv_abs)
    return TrendClass::insignificant;
  if (delta_mean < 0.0) return TrendClass::improved;
  if (delta_mean > 0.0) return TrendClass::worsened;
  return TrendClass::insignificant;
}

TrendDelta trend_delta(const CarbonTrace& period_a, const CarbonTrace& period_b,
                       const TrendThresholds& t) {
  constexpr std::size_t min_hours = 28 * 24;
  if (period_a.size() < min_hours || period_b.size() < min_hours)
    throw std::invalid_argument("trend_delta: both periods must cover at least 28 days");
  if (period_a.region_id != period_b.region_id)
    throw std::invalid_argument("trend_delta: region mismatch '" + period_a.region_id + "' vs '" +
                                period_b.region_id + "'");

  const TraceStats a = compute_stats(period_a);
  const TraceStats b = compute_stats(period_b);
  TrendDelta d;
  d.region_id = period_a.region_id;
  d.mean_a = a.mean;
  d.mean_b = b.mean;
  d.cv_a = a.cv;
  d.cv_b = b.cv;
  d.delta_mean = b.mean - a.mean;
  d.delta_cv = b.cv - a.cv;
  d.cls = classify_trend(d.delta_mean, d.delta_cv, t);
  return d;
}

}  // namespace carbonshift
