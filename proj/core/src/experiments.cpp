#include "carbonshift/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "carbonshift/clustering.hpp"
#include "carbonshift/spatial.hpp"
#include "carbonshift/temporal.hpp"
#include "carbonshift/workload.hpp"

namespace carbonshift {

namespace {

using nlohmann::json;

void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& context) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw std::invalid_argument(context + ": unknown key '" + key + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<double> number_list(const json& j, const std::string& context) {
  if (!j.is_array()) throw std::invalid_argument(context + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument(context + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> string_list(const json& j, const std::string& context) {
  if (!j.is_array()) throw std::invalid_argument(context + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw std::invalid_argument(context + " must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(path.string() + ": config must be a JSON object");

  expect_keys(j,
              {"experiment", "trace_dir", "trace_dir_previous", "region_metadata", "regions",
               "geo_groups", "interval", "max_gap_hours", "cv_mode", "candidate_periods",
               "trend_thresholds", "job_lengths", "slack", "mix", "mix_file", "load_weights",
               "capacity", "headroom", "latency_matrix", "slo_grid_ms", "global_avg", "out_dir",
               "seed", "parallelism", "fetch"},
              path.string());

  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  ExperimentConfig c;

  if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
  if (j.contains("trace_dir")) c.trace_dir = resolve(base, j.at("trace_dir").get<std::string>());
  if (j.contains("trace_dir_previous"))
    c.trace_dir_previous = resolve(base, j.at("trace_dir_previous").get<std::string>());
  if (j.contains("region_metadata"))
    c.region_metadata = resolve(base, j.at("region_metadata").get<std::string>());
  if (j.contains("regions")) c.regions = string_list(j.at("regions"), "regions");
  if (j.contains("geo_groups")) c.geo_groups = string_list(j.at("geo_groups"), "geo_groups");

  if (j.contains("interval")) {
    const auto& iv = j.at("interval");
    expect_keys(iv, {"begin", "end"}, "interval");
    if (!iv.contains("begin") || !iv.contains("end"))
      throw std::invalid_argument("interval needs begin and end");
    SlotRange r{iv.at("begin").get<std::size_t>(), iv.at("end").get<std::size_t>()};
    if (r.begin >= r.end) throw std::invalid_argument("interval must be non-empty");
    c.interval = r;
  }

  if (j.contains("max_gap_hours")) {
    c.max_gap_hours = j.at("max_gap_hours").get<int>();
    if (c.max_gap_hours < 0) throw std::invalid_argument("max_gap_hours must be >= 0");
  }
  if (j.contains("cv_mode")) {
    c.cv_mode = j.at("cv_mode").get<std::string>();
    if (c.cv_mode != "full" && c.cv_mode != "daily_mean")
      throw std::invalid_argument("cv_mode must be 'full' or 'daily_mean'");
  }
  if (j.contains("candidate_periods")) {
    c.candidate_periods.clear();
    for (double v : number_list(j.at("candidate_periods"), "candidate_periods")) {
      if (v < 1.0 || v != std::floor(v))
        throw std::invalid_argument("candidate_periods must be positive whole hours");
      c.candidate_periods.push_back(static_cast<int>(v));
    }
    if (c.candidate_periods.empty())
      throw std::invalid_argument("candidate_periods must not be empty");
  }
  if (j.contains("trend_thresholds")) {
    const auto& t = j.at("trend_thresholds");
    expect_keys(t, {"mean", "cv"}, "trend_thresholds");
    if (t.contains("mean")) c.trend_thresholds.mean_abs = t.at("mean").get<double>();
    if (t.contains("cv")) c.trend_thresholds.cv_abs = t.at("cv").get<double>();
    if (c.trend_thresholds.mean_abs < 0.0 || c.trend_thresholds.cv_abs < 0.0)
      throw std::invalid_argument("trend thresholds must be non-negative");
  }

  if (j.contains("job_lengths")) {
    c.job_lengths = number_list(j.at("job_lengths"), "job_lengths");
    for (double len : c.job_lengths)
      if (!(len > 0.0)) throw std::invalid_argument("job_lengths must be positive");
  }
  if (j.contains("slack")) {
    const auto& s = j.at("slack");
    expect_keys(s, {"fixed_hours", "multipliers"}, "slack");
    if (s.contains("fixed_hours")) c.slack.fixed_hours = number_list(s.at("fixed_hours"), "fixed_hours");
    if (s.contains("multipliers")) c.slack.multipliers = number_list(s.at("multipliers"), "multipliers");
    for (double v : c.slack.fixed_hours)
      if (v < 0.0) throw std::invalid_argument("slack hours must be >= 0");
    for (double v : c.slack.multipliers)
      if (v < 0.0) throw std::invalid_argument("slack multipliers must be >= 0");
  }
  if (j.contains("mix")) c.mix = j.at("mix").get<std::string>();
  if (j.contains("mix_file")) c.mix_file = resolve(base, j.at("mix_file").get<std::string>());

  if (j.contains("load_weights")) c.load_weights = resolve(base, j.at("load_weights").get<std::string>());
  if (j.contains("capacity")) c.capacity = resolve(base, j.at("capacity").get<std::string>());
  if (j.contains("headroom")) {
    c.headroom = j.at("headroom").get<double>();
    if (!(c.headroom >= 0.0)) throw std::invalid_argument("headroom must be >= 0");
  }
  if (j.contains("latency_matrix"))
    c.latency_matrix = resolve(base, j.at("latency_matrix").get<std::string>());
  if (j.contains("slo_grid_ms")) {
    c.slo_grid_ms = number_list(j.at("slo_grid_ms"), "slo_grid_ms");
    for (double v : c.slo_grid_ms)
      if (v < 0.0) throw std::invalid_argument("slo_grid_ms must be >= 0");
  }

  if (j.contains("global_avg")) {
    c.global_avg = j.at("global_avg").get<double>();
    if (!(c.global_avg > 0.0)) throw std::invalid_argument("global_avg must be positive");
  }
  if (j.contains("out_dir")) c.out_dir = resolve(base, j.at("out_dir").get<std::string>());
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("parallelism")) {
    c.parallelism = j.at("parallelism").get<int>();
    if (c.parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  }

  if (j.contains("fetch")) {
    const auto& f = j.at("fetch");
    expect_keys(f,
                {"endpoint", "regions", "start", "end", "field_map", "array_field", "token_env",
                 "token_header", "attempts", "backoff_base_ms"},
                "fetch");
    if (f.contains("endpoint")) c.fetch.endpoint = f.at("endpoint").get<std::string>();
    if (f.contains("regions")) c.fetch.regions = string_list(f.at("regions"), "fetch.regions");
    if (f.contains("start")) c.fetch.start = f.at("start").get<std::string>();
    if (f.contains("end")) c.fetch.end = f.at("end").get<std::string>();
    if (f.contains("field_map"))
      for (const auto& [k, v] : f.at("field_map").items())
        c.fetch.field_map[k] = v.get<std::string>();
    if (f.contains("array_field")) c.fetch.array_field = f.at("array_field").get<std::string>();
    if (f.contains("token_env")) c.fetch.token_env = f.at("token_env").get<std::string>();
    if (f.contains("token_header")) c.fetch.token_header = f.at("token_header").get<std::string>();
    if (f.contains("attempts")) c.fetch.attempts = f.at("attempts").get<int>();
    if (f.contains("backoff_base_ms")) c.fetch.backoff_base_ms = f.at("backoff_base_ms").get<int>();
  }

  return c;
}

namespace {

void parallel_for(std::size_t count, int parallelism, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(parallelism, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Collects written files and warnings; everything lands via atomic writes.
struct OutputSink {
  std::filesystem::path out_dir;
  RunReport report;

  void write(const std::string& name, const std::string& content) {
    const auto path = out_dir / name;
    write_file_atomic(path, content);
    report.outputs.push_back(path);
  }
  void warn(const std::string& context, const std::string& message) {
    report.warnings.push_back({context, message});
  }
  void finish() {
    json w = json::array();
    for (const auto& warning : report.warnings)
      w.push_back({{"context", warning.context}, {"message", warning.message}});
    write("warnings.json", w.dump(2) + "\n");
  }
};

void check_experiment_label(const ExperimentConfig& config, const char* command) {
  if (config.experiment.empty() || config.experiment == command) return;
  // The capacity scenario is a spatial sub-report with its own manifests.
  if (config.experiment == "capacity" && std::string(command) == "spatial") return;
  throw std::invalid_argument("config is for experiment '" + config.experiment +
                              "', not for '" + command + "'");
}

struct LoadedCorpus {
  std::vector<CarbonTrace> traces;  // sorted by region id
  RegionMetadata metadata;
};

LoadedCorpus load_corpus(const ExperimentConfig& config) {
  if (config.trace_dir.empty()) throw std::invalid_argument("config lacks trace_dir");
  LoadedCorpus corpus;
  corpus.traces = load_traces_dir(config.trace_dir, {config.max_gap_hours});
  if (!config.region_metadata.empty()) corpus.metadata = load_region_metadata(config.region_metadata);

  if (!config.regions.empty()) {
    const std::set<std::string> keep(config.regions.begin(), config.regions.end());
    for (const auto& id : keep) {
      const bool found = std::any_of(corpus.traces.begin(), corpus.traces.end(),
                                     [&](const CarbonTrace& t) { return t.region_id == id; });
      if (!found) throw std::invalid_argument("region filter names unknown region '" + id + "'");
    }
    std::erase_if(corpus.traces,
                  [&](const CarbonTrace& t) { return keep.count(t.region_id) == 0; });
  }
  if (!config.geo_groups.empty()) {
    const std::set<std::string> keep(config.geo_groups.begin(), config.geo_groups.end());
    std::erase_if(corpus.traces, [&](const CarbonTrace& t) {
      auto it = corpus.metadata.find(t.region_id);
      return it == corpus.metadata.end() || keep.count(it->second.geo_group) == 0;
    });
  }
  if (corpus.traces.empty()) throw std::runtime_error("no traces left after filtering");
  return corpus;
}

const RegionMeta& meta_of(const RegionMetadata& metadata, const std::string& id) {
  static const RegionMeta empty;
  auto it = metadata.find(id);
  return it == metadata.end() ? empty : it->second;
}

std::string label_or(const std::string& s, const char* fallback) { return s.empty() ? fallback : s; }

std::map<std::string, double> load_fraction_map(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(path.string() + ": expected a JSON object");
  std::map<std::string, double> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number())
      throw std::invalid_argument(path.string() + ": value for '" + key + "' is not a number");
    const double v = value.get<double>();
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument(path.string() + ": value for '" + key + "' must be >= 0");
    out[key] = v;
  }
  return out;
}

OriginWeights load_or_equal_weights(const ExperimentConfig& config,
                                    const std::vector<std::string>& region_ids) {
  OriginWeights load;
  if (!config.load_weights.empty()) {
    load = load_origin_weights_file(config.load_weights);
  } else {
    for (const auto& id : region_ids)
      load.weights[id] = 1.0 / static_cast<double>(region_ids.size());
  }
  return load;
}

SlotRange interval_or_full(const ExperimentConfig& config, std::size_t hours) {
  if (!config.interval) return {0, hours};
  if (config.interval->end > hours)
    throw std::invalid_argument("configured interval ends at slot " +
                                std::to_string(config.interval->end) + " but traces cover " +
                                std::to_string(hours) + " h");
  return *config.interval;
}

}  // namespace

// --------------------------------------------------------------------------
// analyze

RunReport cmd_analyze(const ExperimentConfig& config) {
  check_experiment_label(config, "analyze");
  OutputSink sink{config.out_dir, {}};
  const LoadedCorpus corpus = load_corpus(config);

  struct RegionRow {
    std::string id;
    TraceStats stats;
    double cv_daily = 0.0;
    std::vector<PeriodicityEntry> periods;
  };

  const int max_period = *std::max_element(config.candidate_periods.begin(),
                                           config.candidate_periods.end());
  std::vector<RegionRow> rows;
  for (const auto& trace : corpus.traces) {
    if (trace.size() < 24) {
      sink.warn(trace.region_id, "trace of " + std::to_string(trace.size()) +
                                     " h is shorter than one day; region skipped");
      continue;
    }
    RegionRow row;
    row.id = trace.region_id;
    std::optional<SlotRange> window;
    if (config.interval) {
      if (config.interval->end > trace.size()) {
        sink.warn(trace.region_id, "configured interval does not fit; region skipped");
        continue;
      }
      window = config.interval;
    }
    row.stats = compute_stats(trace, window);
    row.cv_daily = (window ? window->size() : trace.size()) >= 24
                       ? mean_daily_cv(trace, window)
                       : 0.0;
    if (trace.size() >= 2 * static_cast<std::size_t>(max_period)) {
      row.periods = detect_periodicity(trace, config.candidate_periods);
    } else {
      sink.warn(trace.region_id, "trace too short for periodicity at " + std::to_string(max_period) +
                                     " h; periodicity skipped");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no usable traces: all regions were skipped");

  const auto chosen_cv = [&](const RegionRow& r) {
    return config.cv_mode == "daily_mean" ? r.cv_daily : r.stats.cv;
  };
  double avg_ci = 0.0, avg_cv = 0.0;
  for (const auto& r : rows) {
    avg_ci += r.stats.mean;
    avg_cv += chosen_cv(r);
  }
  avg_ci /= static_cast<double>(rows.size());
  avg_cv /= static_cast<double>(rows.size());

  std::string stats_csv =
      "region,continent,geo_group,hours,mean,std,cv,cv_daily_mean,min,max,ci_class,cv_class\n";
  json regions_json = json::object();
  for (const auto& r : rows) {
    const auto& meta = meta_of(corpus.metadata, r.id);
    const QuadrantLabel q =
        classify_quadrant({r.stats.mean, r.stats.std, chosen_cv(r), r.stats.min, r.stats.max},
                          avg_ci, avg_cv);
    const auto hours = config.interval ? config.interval->size()
                                       : std::find_if(corpus.traces.begin(), corpus.traces.end(),
                                                      [&](const CarbonTrace& t) {
                                                        return t.region_id == r.id;
                                                      })->size();
    stats_csv += r.id + "," + meta.continent + "," + meta.geo_group + "," + std::to_string(hours) +
                 "," + format_fixed(r.stats.mean) + "," + format_fixed(r.stats.std) + "," +
                 format_fixed(r.stats.cv) + "," + format_fixed(r.cv_daily) + "," +
                 format_fixed(r.stats.min) + "," + format_fixed(r.stats.max) + "," +
                 to_string(q.ci_class) + "," + to_string(q.cv_class) + "\n";

    json& node = regions_json[r.id];
    node = {{"continent", meta.continent},
            {"geo_group", meta.geo_group},
            {"hours", hours},
            {"mean", r.stats.mean},
            {"std", r.stats.std},
            {"cv", r.stats.cv},
            {"cv_daily_mean", r.cv_daily},
            {"min", r.stats.min},
            {"max", r.stats.max},
            {"ci_class", to_string(q.ci_class)},
            {"cv_class", to_string(q.cv_class)}};
    if (!r.periods.empty()) {
      json periods = json::array();
      for (const auto& p : r.periods)
        periods.push_back({{"period_hours", p.period_hours}, {"score", p.score}});
      node["periodicity"] = periods;
    }
  }
  sink.write("stats.csv", stats_csv);

  std::string periodicity_csv = "region,period_hours,score\n";
  for (const auto& r : rows)
    for (const auto& p : r.periods)
      periodicity_csv +=
          r.id + "," + std::to_string(p.period_hours) + "," + format_fixed(p.score) + "\n";
  sink.write("periodicity.csv", periodicity_csv);

  json root = {{"corpus",
                {{"regions", rows.size()},
                 {"avg_ci", avg_ci},
                 {"avg_cv", avg_cv},
                 {"cv_mode", config.cv_mode}}},
               {"regions", regions_json}};

  if (!config.trace_dir_previous.empty()) {
    auto previous = load_traces_dir(config.trace_dir_previous, {config.max_gap_hours});
    std::map<std::string, const CarbonTrace*> prev_by_id;
    for (const auto& t : previous) prev_by_id[t.region_id] = &t;

    std::vector<TrendDelta> deltas;
    for (const auto& trace : corpus.traces) {
      auto it = prev_by_id.find(trace.region_id);
      if (it == prev_by_id.end()) {
        sink.warn(trace.region_id, "no previous-period trace; trend skipped");
        continue;
      }
      constexpr std::size_t min_hours = 28 * 24;
      if (trace.size() < min_hours || it->second->size() < min_hours) {
        sink.warn(trace.region_id, "period shorter than 28 days; trend skipped");
        continue;
      }
      deltas.push_back(trend_delta(*it->second, trace, config.trend_thresholds));
    }

    std::vector<int> cluster_of(deltas.size(), -1);
    json centroids = json::array();
    std::vector<Point2> points;
    for (const auto& d : deltas) points.push_back({d.delta_mean, d.delta_cv});
    const std::set<Point2> distinct(points.begin(), points.end());
    if (distinct.size() >= 3) {
      const KMeansResult km = kmeans_cluster(points, 3, config.seed);
      // Stable labels: clusters renumbered by ascending mean shift.
      std::vector<std::size_t> order = {0, 1, 2};
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return km.centroids[a] < km.centroids[b];
      });
      std::vector<int> relabel(3, 0);
      for (std::size_t rank = 0; rank < order.size(); ++rank)
        relabel[order[rank]] = static_cast<int>(rank);
      for (std::size_t i = 0; i < deltas.size(); ++i) cluster_of[i] = relabel[km.assignment[i]];
      for (std::size_t rank = 0; rank < order.size(); ++rank)
        centroids.push_back({{"cluster", rank},
                             {"delta_mean", km.centroids[order[rank]][0]},
                             {"delta_cv", km.centroids[order[rank]][1]}});
    } else if (!deltas.empty()) {
      sink.warn("trend", "fewer than 3 distinct delta points; k-means skipped");
    }

    std::string trend_csv =
        "region,mean_previous,mean_current,delta_mean,cv_previous,cv_current,delta_cv,"
        "threshold_class,kmeans_cluster\n";
    json trend_json = json::array();
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      const auto& d = deltas[i];
      trend_csv += d.region_id + "," + format_fixed(d.mean_a) + "," + format_fixed(d.mean_b) + "," +
                   format_fixed(d.delta_mean) + "," + format_fixed(d.cv_a) + "," +
                   format_fixed(d.cv_b) + "," + format_fixed(d.delta_cv) + "," + to_string(d.cls) +
                   "," + std::to_string(cluster_of[i]) + "\n";
      trend_json.push_back({{"region", d.region_id},
                            {"mean_previous", d.mean_a},
                            {"mean_current", d.mean_b},
                            {"delta_mean", d.delta_mean},
                            {"cv_previous", d.cv_a},
                            {"cv_current", d.cv_b},
                            {"delta_cv", d.delta_cv},
                            {"threshold_class", to_string(d.cls)},
                            {"kmeans_cluster", cluster_of[i]}});
    }
    sink.write("trend.csv", trend_csv);
    root["trend"] = {{"deltas", trend_json}, {"centroids", centroids}};
  }

  sink.write("analyze.json", root.dump(2) + "\n");
  sink.finish();
  return sink.report;
}

// --------------------------------------------------------------------------
// temporal

namespace {

struct SlackSpec {
  Slack slack;
  std::string kind;
  double value;
};

std::vector<SlackSpec> slack_specs(const ExperimentConfig& config) {
  std::vector<SlackSpec> specs;
  for (double h : config.slack.fixed_hours) specs.push_back({Slack::fixed(h), "fixed", h});
  for (double m : config.slack.multipliers) specs.push_back({Slack::multiplier(m), "multiplier", m});
  if (specs.empty()) specs.push_back({Slack::fixed(24.0), "fixed", 24.0});
  return specs;
}

}  // namespace

RunReport cmd_temporal(const ExperimentConfig& config) {
  check_experiment_label(config, "temporal");
  OutputSink sink{config.out_dir, {}};
  const LoadedCorpus corpus = load_corpus(config);

  const std::vector<double> lengths =
      config.job_lengths.empty() ? standard_job_lengths() : config.job_lengths;
  const std::vector<SlackSpec> slacks = slack_specs(config);
  const WorkloadMix mix = config.mix_file.empty() ? mix_preset(parse_mix_preset(config.mix))
                                                  : load_mix_file(config.mix_file);
  for (const auto& [len, weight] : mix.weights)
    if (weight > 0.0 && std::find(lengths.begin(), lengths.end(), len) == lengths.end())
      throw std::invalid_argument("mix weights job length " + format_double(len) +
                                  " which is not in job_lengths");

  struct Cell {
    std::size_t trace_index;
    std::size_t slack_index;
    std::size_t length_index;
    Job job;
    bool fits = false;
    PolicySweep sweep;
  };

  std::vector<Cell> cells;
  for (std::size_t t = 0; t < corpus.traces.size(); ++t)
    for (std::size_t s = 0; s < slacks.size(); ++s)
      for (std::size_t l = 0; l < lengths.size(); ++l) {
        Cell cell;
        cell.trace_index = t;
        cell.slack_index = s;
        cell.length_index = l;
        cell.job.length_hours = lengths[l];
        cell.job.interruptible = true;
        cell.job.origin = corpus.traces[t].region_id;
        // Interactive work has no temporal flexibility regardless of the grid.
        cell.job.slack = lengths[l] <= interactive_threshold_hours ? Slack::fixed(0.0)
                                                                   : slacks[s].slack;
        const JobSlots slots = job_slots(cell.job.length_hours);
        const std::size_t span = slots.full_slots + (slots.frac > 0.0 ? 1 : 0);
        const double slack_hours = std::floor(cell.job.slack_hours());
        const std::size_t n = corpus.traces[t].size();
        const std::size_t need =
            span + (slack_hours >= static_cast<double>(n) ? n
                                                          : static_cast<std::size_t>(slack_hours));
        cell.fits = need <= n;
        if (!cell.fits)
          sink.warn(corpus.traces[t].region_id,
                    "job length " + format_double(lengths[l]) + " h with " + slacks[s].kind +
                        " slack " + format_double(slacks[s].value) + " has no valid arrival");
        cells.push_back(std::move(cell));
      }

  std::size_t fitting = 0;
  for (const auto& c : cells) fitting += c.fits ? 1 : 0;
  if (fitting == 0) throw std::runtime_error("no (region, length, slack) cell fits its trace");

  parallel_for(cells.size(), config.parallelism, [&](std::size_t i) {
    if (!cells[i].fits) return;
    cells[i].sweep = sweep_all_policies(corpus.traces[cells[i].trace_index], cells[i].job);
  });

  const char* policy_names[3] = {"deferred", "interrupted", "interrupted_extra"};
  std::string csv =
      "region,continent,length_hours,slack_kind,slack_value,slack_hours,policy,arrivals,"
      "mean_relative_pct,std_relative_pct,mean_absolute_per_hour,mean_relative_to_global_pct\n";
  json cells_json = json::array();
  for (const auto& cell : cells) {
    if (!cell.fits) continue;
    const auto& trace = corpus.traces[cell.trace_index];
    const auto& meta = meta_of(corpus.metadata, trace.region_id);
    const auto& spec = slacks[cell.slack_index];
    const SweepSeries* series[3] = {&cell.sweep.deferred, &cell.sweep.interrupted,
                                    &cell.sweep.extra};
    for (int p = 0; p < 3; ++p) {
      const double rel_global = relative_to_global(series[p]->absolute_per_hour.mean,
                                                   config.global_avg);
      csv += trace.region_id + "," + meta.continent + "," + format_double(cell.job.length_hours) +
             "," + spec.kind + "," + format_double(spec.value) + "," +
             format_double(cell.job.slack_hours()) + "," + policy_names[p] + "," +
             std::to_string(cell.sweep.arrivals) + "," + format_fixed(series[p]->relative_pct.mean) +
             "," + format_fixed(series[p]->relative_pct.std) + "," +
             format_fixed(series[p]->absolute_per_hour.mean) + "," + format_fixed(rel_global) + "\n";
      cells_json.push_back({{"region", trace.region_id},
                            {"continent", meta.continent},
                            {"length_hours", cell.job.length_hours},
                            {"slack_kind", spec.kind},
                            {"slack_value", spec.value},
                            {"slack_hours", cell.job.slack_hours()},
                            {"policy", policy_names[p]},
                            {"arrivals", cell.sweep.arrivals},
                            {"mean_relative_pct", series[p]->relative_pct.mean},
                            {"std_relative_pct", series[p]->relative_pct.std},
                            {"mean_absolute_per_hour", series[p]->absolute_per_hour.mean},
                            {"mean_relative_to_global_pct", rel_global}});
    }
  }
  sink.write("temporal.csv", csv);

  // Mix-weighted summaries per scope: global plus one per continent.
  std::map<std::string, std::vector<std::size_t>> scopes;  // scope -> trace indices
  for (std::size_t t = 0; t < corpus.traces.size(); ++t) {
    scopes["global"].push_back(t);
    scopes[label_or(meta_of(corpus.metadata, corpus.traces[t].region_id).continent, "unknown")]
        .push_back(t);
  }

  const std::string mix_name = config.mix_file.empty() ? config.mix : config.mix_file.filename().string();
  std::string summary_csv =
      "scope,mix,slack_kind,slack_value,policy,regions,mean_relative_to_global_pct,"
      "std_relative_to_global_pct\n";
  json summary_json = json::array();
  for (const auto& [scope, trace_indices] : scopes) {
    for (std::size_t s = 0; s < slacks.size(); ++s) {
      for (int p = 0; p < 2; ++p) {  // deferred, interrupted
        std::vector<double> per_region;
        for (std::size_t t : trace_indices) {
          std::map<double, double> per_length;
          for (const auto& cell : cells) {
            if (!cell.fits || cell.trace_index != t || cell.slack_index != s) continue;
            const SweepSeries& series = p == 0 ? cell.sweep.deferred : cell.sweep.interrupted;
            per_length[cell.job.length_hours] =
                relative_to_global(series.absolute_per_hour.mean, config.global_avg);
          }
          try {
            per_region.push_back(expected_savings(per_length, mix));
          } catch (const std::invalid_argument&) {
            sink.warn(corpus.traces[t].region_id,
                      "summary for scope '" + scope + "' skips region: missing length cells");
          }
        }
        if (per_region.empty()) continue;
        const MeanStd agg = mean_std(per_region);
        summary_csv += scope + "," + mix_name + "," + slacks[s].kind + "," +
                       format_double(slacks[s].value) + "," + policy_names[p] + "," +
                       std::to_string(per_region.size()) + "," + format_fixed(agg.mean) + "," +
                       format_fixed(agg.std) + "\n";
        summary_json.push_back({{"scope", scope},
                                {"mix", mix_name},
                                {"slack_kind", slacks[s].kind},
                                {"slack_value", slacks[s].value},
                                {"policy", policy_names[p]},
                                {"regions", per_region.size()},
                                {"mean_relative_to_global_pct", agg.mean},
                                {"std_relative_to_global_pct", agg.std}});
      }
    }
  }
  sink.write("temporal_summary.csv", summary_csv);

  sink.write("temporal.json",
             json{{"cells", cells_json}, {"summary", summary_json}}.dump(2) + "\n");
  sink.finish();
  return sink.report;
}

// --------------------------------------------------------------------------
// spatial

RunReport cmd_spatial(const ExperimentConfig& config) {
  check_experiment_label(config, "spatial");
  OutputSink sink{config.out_dir, {}};
  const LoadedCorpus corpus = load_corpus(config);
  const RegionCatalog catalog(corpus.traces, corpus.metadata);
  const SlotRange interval = interval_or_full(config, catalog.hours());
  const auto& ids = catalog.region_ids();
  const OriginWeights load = load_or_equal_weights(config, ids);

  json root = json::object();

  // Global and per-geo-group savings of moving every origin to the greenest
  // region, measured against the global average intensity.
  const MigrationPlan greenest = plan_one_migration(catalog, ids.front(), ids, interval);
  const std::string& green_id = greenest.destinations.front();
  const double green_mean = catalog.interval_mean(green_id, interval);

  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids)
    groups[label_or(catalog.meta(id).geo_group, "ungrouped")].push_back(id);

  std::string global_csv = "scope,regions,destination,savings_rel_global_pct,savings_rel_pct\n";
  json global_json = json::array();
  const auto emit_scope = [&](const std::string& scope, const std::vector<std::string>& members) {
    double w_total = 0.0, w_abs = 0.0, w_baseline = 0.0;
    for (const auto& id : members) {
      auto it = load.weights.find(id);
      const double w = it == load.weights.end() ? 0.0 : it->second;
      if (w == 0.0) continue;
      const double mean = catalog.interval_mean(id, interval);
      w_total += w;
      w_abs += w * (mean - green_mean);
      w_baseline += w * mean;
    }
    if (w_total <= 0.0) {
      sink.warn(scope, "no load in scope; row skipped");
      return;
    }
    const double rel_global = 100.0 * w_abs / (w_total * config.global_avg);
    const double rel = w_baseline > 0.0 ? 100.0 * w_abs / w_baseline : 0.0;
    global_csv += scope + "," + std::to_string(members.size()) + "," + green_id + "," +
                  format_fixed(rel_global) + "," + format_fixed(rel) + "\n";
    global_json.push_back({{"scope", scope},
                           {"regions", members.size()},
                           {"destination", green_id},
                           {"savings_rel_global_pct", rel_global},
                           {"savings_rel_pct", rel}});
  };
  emit_scope("global", ids);
  for (const auto& [group, members] : groups) emit_scope(group, members);
  sink.write("spatial_global.csv", global_csv);
  root["global"] = global_json;

  // Pairwise origin -> destination savings.
  const auto matrix = savings_matrix(catalog, ids, interval);
  std::string matrix_csv = "origin,destination,savings_pct\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = 0; j < ids.size(); ++j)
      matrix_csv += ids[i] + "," + ids[j] + "," + format_fixed(100.0 * matrix[i][j]) + "\n";
  sink.write("savings_matrix.csv", matrix_csv);

  // One step down the carbon ranking.
  const AdjacentRankingResult adjacent = adjacent_ranking_savings(catalog, load, interval);
  std::string adjacent_csv = "rank,origin,destination,load,origin_mean,destination_mean\n";
  json adjacent_json = json::array();
  for (std::size_t i = 0; i < adjacent.moves.size(); ++i) {
    const auto& m = adjacent.moves[i];
    adjacent_csv += std::to_string(i) + "," + m.origin + "," + m.destination + "," +
                    format_fixed(m.load) + "," + format_fixed(m.origin_mean) + "," +
                    format_fixed(m.destination_mean) + "\n";
    adjacent_json.push_back({{"origin", m.origin},
                             {"destination", m.destination},
                             {"load", m.load},
                             {"origin_mean", m.origin_mean},
                             {"destination_mean", m.destination_mean}});
  }
  sink.write("adjacent_ranking.csv", adjacent_csv);
  root["adjacent_ranking"] = {{"moves", adjacent_json},
                              {"savings_pct", 100.0 * adjacent.savings_fraction}};

  // Migrate-once vs per-slot hopping, per origin and load-weighted.
  std::string one_inf_csv =
      "origin,destination_one,stay_emissions,one_emissions,infinite_emissions,one_savings_pct,"
      "infinite_savings_pct,gap_pct\n";
  json one_inf_json = json::array();
  double agg_one = 0.0, agg_inf = 0.0, agg_weight = 0.0;
  for (const auto& id : ids) {
    const MigrationPlan one = plan_one_migration(catalog, id, ids, interval);
    const MigrationPlan inf = plan_infinite_migration(catalog, id, ids, interval);
    double stay = 0.0;
    for (std::size_t t = interval.begin; t < interval.end; ++t) stay += catalog.trace(id).values[t];
    const double one_pct = stay > 0.0 ? 100.0 * (stay - one.emissions) / stay : 0.0;
    const double inf_pct = stay > 0.0 ? 100.0 * (stay - inf.emissions) / stay : 0.0;
    const double gap = one.emissions > 0.0
                           ? 100.0 * (one.emissions - inf.emissions) / one.emissions
                           : 0.0;
    one_inf_csv += id + "," + one.destinations.front() + "," + format_fixed(stay) + "," +
                   format_fixed(one.emissions) + "," + format_fixed(inf.emissions) + "," +
                   format_fixed(one_pct) + "," + format_fixed(inf_pct) + "," + format_fixed(gap) +
                   "\n";
    one_inf_json.push_back({{"origin", id},
                            {"destination_one", one.destinations.front()},
                            {"stay_emissions", stay},
                            {"one_emissions", one.emissions},
                            {"infinite_emissions", inf.emissions},
                            {"one_savings_pct", one_pct},
                            {"infinite_savings_pct", inf_pct},
                            {"gap_pct", gap}});
    auto it = load.weights.find(id);
    const double w = it == load.weights.end() ? 0.0 : it->second;
    agg_one += w * one.emissions;
    agg_inf += w * inf.emissions;
    agg_weight += w;
  }
  sink.write("one_vs_inf.csv", one_inf_csv);
  const double agg_gap = agg_one > 0.0 ? 100.0 * (agg_one - agg_inf) / agg_one : 0.0;
  root["one_vs_inf"] = {{"rows", one_inf_json}, {"aggregate_gap_pct", agg_gap}};

  std::string summary_csv = "metric,value\n";
  json summary = json::object();
  const auto add_metric = [&](const std::string& name, double value) {
    summary_csv += name + "," + format_fixed(value) + "\n";
    summary[name] = value;
  };
  if (!global_json.empty())
    add_metric("global_savings_rel_global_pct",
               global_json[0]["savings_rel_global_pct"].get<double>());
  add_metric("adjacent_ranking_savings_pct", 100.0 * adjacent.savings_fraction);
  add_metric("one_vs_inf_gap_pct", agg_gap);

  if (!config.capacity.empty()) {
    CapacityModel model;
    model.load = load;
    model.capacity = load_fraction_map(config.capacity);
    model.headroom = config.headroom;
    const CapacityPlanResult plan = plan_capacity_constrained(catalog, model, interval);
    std::string moves_csv = "source,destination,amount\n";
    json moves_json = json::array();
    for (const auto& m : plan.moves) {
      moves_csv += m.source + "," + m.destination + "," + format_fixed(m.amount) + "\n";
      moves_json.push_back(
          {{"source", m.source}, {"destination", m.destination}, {"amount", m.amount}});
    }
    sink.write("capacity_moves.csv", moves_csv);
    root["capacity"] = {{"moves", moves_json},
                        {"headroom", config.headroom},
                        {"baseline_emissions", plan.baseline_emissions},
                        {"constrained_emissions", plan.constrained_emissions},
                        {"constrained_savings_pct", 100.0 * plan.constrained_savings},
                        {"unconstrained_savings_pct", 100.0 * plan.unconstrained_savings}};
    add_metric("capacity_constrained_savings_pct", 100.0 * plan.constrained_savings);
    add_metric("capacity_unconstrained_savings_pct", 100.0 * plan.unconstrained_savings);
  }

  sink.write("spatial_summary.csv", summary_csv);
  root["summary"] = summary;
  sink.write("spatial.json", root.dump(2) + "\n");
  sink.finish();
  return sink.report;
}

// --------------------------------------------------------------------------
// latency

RunReport cmd_latency(const ExperimentConfig& config) {
  check_experiment_label(config, "latency");
  OutputSink sink{config.out_dir, {}};
  const LoadedCorpus corpus = load_corpus(config);
  const RegionCatalog catalog(corpus.traces, corpus.metadata);
  const SlotRange interval = interval_or_full(config, catalog.hours());
  const auto& ids = catalog.region_ids();
  if (config.latency_matrix.empty()) throw std::invalid_argument("config lacks latency_matrix");
  const LatencyMatrix latency = load_latency_matrix(config.latency_matrix);
  const OriginWeights load = load_or_equal_weights(config, ids);

  std::vector<double> grid = config.slo_grid_ms;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw std::invalid_argument("empty slo_grid_ms");

  // Scope load maps: global plus per geo group, renormalized within scope.
  std::vector<std::pair<std::string, OriginWeights>> scopes;
  scopes.push_back({"global", load});
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& id : ids)
    groups[label_or(catalog.meta(id).geo_group, "ungrouped")].push_back(id);
  for (const auto& [group, members] : groups) {
    double total = 0.0;
    OriginWeights scoped;
    for (const auto& id : members) {
      auto it = load.weights.find(id);
      if (it != load.weights.end() && it->second > 0.0) {
        scoped.weights[id] = it->second;
        total += it->second;
      }
    }
    if (total <= 0.0) {
      sink.warn(group, "no load in geo group; curve skipped");
      continue;
    }
    for (auto& [id, w] : scoped.weights) w /= total;
    scopes.push_back({group, std::move(scoped)});
  }

  std::string csv = "scope,slo_ms,savings_rel_global_pct\n";
  json curves = json::object();
  for (const auto& [scope, scoped_load] : scopes) {
    json points = json::array();
    for (double slo : grid) {
      const LatencyRoutingResult r =
          latency_routing(catalog, latency, scoped_load, slo, interval, config.global_avg);
      csv += scope + "," + format_double(slo) + "," + format_fixed(r.savings_rel_global_pct) + "\n";
      points.push_back({{"slo_ms", slo}, {"savings_rel_global_pct", r.savings_rel_global_pct}});
    }
    curves[scope] = points;
  }
  sink.write("latency_curve.csv", csv);
  sink.write("latency.json", json{{"curves", curves}}.dump(2) + "\n");
  sink.finish();
  return sink.report;
}

// --------------------------------------------------------------------------
// fetch

RunReport cmd_fetch(const ExperimentConfig& config) {
  check_experiment_label(config, "fetch");
  if (config.fetch.endpoint.empty()) throw std::invalid_argument("config lacks fetch.endpoint");
  OutputSink sink{config.out_dir, {}};
  const FetchResult result = fetch_traces(config.fetch, config.out_dir);
  for (const auto& path : result.written) sink.report.outputs.push_back(path);
  for (const auto& warning : result.warnings) sink.report.warnings.push_back(warning);
  for (const auto& path : result.skipped)
    sink.warn(path.filename().string(), "already complete; skipped");
  sink.report.ok = result.ok;
  sink.finish();
  return sink.report;
}

}  // namespace carbonshift
