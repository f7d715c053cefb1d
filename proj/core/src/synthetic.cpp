#include "carbonshift/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "carbonshift/rng.hpp"

namespace carbonshift {

namespace {

constexpr double tau = 6.283185307179586476925286766559;

EpochHour default_start() { return parse_utc_hour("2021-01-01T00:00:00Z"); }

std::uint64_t region_seed(std::uint64_t seed, std::size_t index) {
  return seed * 0x100000001b3ULL + index + 1;
}

}  // namespace

const std::vector<SyntheticRegion>& world_regions() {
  // Quadrants vs the corpus averages (mean ~352, daily swing ~0.2):
  // low/low, low-mean/high-swing, high-mean/low-swing, high/high.
  static const std::vector<SyntheticRegion> regions = {
      {"EU01", "Europe", "Europe", 25.0, 0.05, 0.02, 0.01, -1},
      {"EU02", "Europe", "Europe", 120.0, 0.06, 0.03, 0.01, 0},
      {"NA01", "NorthAmerica", "NorthAmerica", 150.0, 0.07, 0.03, 0.01, 1},
      {"EU03", "Europe", "Europe", 180.0, 0.08, 0.04, 0.01, -1},
      {"NA02", "NorthAmerica", "NorthAmerica", 200.0, 0.06, 0.02, 0.01, 0},
      {"OC01", "Oceania", "Oceania", 140.0, 0.35, 0.08, 0.01, 1},
      {"OC02", "Oceania", "Oceania", 180.0, 0.40, 0.10, 0.01, -1},
      {"NA03", "NorthAmerica", "NorthAmerica", 220.0, 0.30, 0.08, 0.01, 0},
      {"EU04", "Europe", "Europe", 240.0, 0.32, 0.10, 0.01, 1},
      {"OC03", "Oceania", "Oceania", 260.0, 0.38, 0.08, 0.01, -1},
      {"AS01", "Asia", "Asia", 520.0, 0.05, 0.02, 0.01, 0},
      {"AS02", "Asia", "Asia", 560.0, 0.06, 0.03, 0.01, 1},
      {"AS03", "Asia", "Asia", 600.0, 0.04, 0.02, 0.01, -1},
      {"AS04", "Asia", "Asia", 640.0, 0.07, 0.03, 0.01, 0},
      {"NA04", "NorthAmerica", "NorthAmerica", 480.0, 0.08, 0.03, 0.01, 1},
      {"OC04", "Oceania", "Oceania", 460.0, 0.30, 0.08, 0.01, -1},
      {"OC05", "Oceania", "Oceania", 500.0, 0.35, 0.10, 0.01, 0},
      {"AS05", "Asia", "Asia", 540.0, 0.28, 0.08, 0.01, 1},
      {"EU05", "Europe", "Europe", 440.0, 0.33, 0.09, 0.01, -1},
      {"NA05", "NorthAmerica", "NorthAmerica", 580.0, 0.30, 0.08, 0.01, 0},
  };
  return regions;
}

CarbonTrace synth_trace(const SyntheticRegion& region, std::size_t hours, EpochHour start_hour,
                        std::uint64_t seed) {
  if (hours == 0) throw std::invalid_argument("synth_trace: hours must be positive");
  if (region.daily_amplitude + region.weekly_amplitude + region.noise_amplitude >= 1.0)
    throw std::invalid_argument("synth_trace: amplitudes of '" + region.id +
                                "' would drive intensity negative");

  Rng rng(seed);
  CarbonTrace trace;
  trace.region_id = region.id;
  trace.start_hour = start_hour;
  trace.values.reserve(hours);
  for (std::size_t t = 0; t < hours; ++t) {
    const double x = static_cast<double>(t) + region.phase_hours;
    double rel = 1.0;
    rel += region.daily_amplitude * std::sin(tau * x / 24.0);
    rel += region.weekly_amplitude * std::sin(tau * (x + 3.0 * region.phase_hours) / 168.0);
    rel += region.noise_amplitude * rng.uniform(-1.0, 1.0);
    trace.values.push_back(region.mean_ci * rel);
  }
  return trace;
}

RegionCatalog make_world_catalog(std::size_t hours, std::uint64_t seed) {
  const auto& regions = world_regions();
  std::vector<CarbonTrace> traces;
  RegionMetadata meta;
  traces.reserve(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    traces.push_back(synth_trace(regions[i], hours, default_start(), region_seed(seed, i)));
    meta[regions[i].id] = {regions[i].continent, regions[i].geo_group, {}};
  }
  return RegionCatalog(std::move(traces), std::move(meta));
}

namespace {

// Drift for the preceding period, cycling insignificant / improved / worsened
// so every trend class shows up in a 20-region corpus.
double previous_mean(const SyntheticRegion& region, std::size_t index) {
  switch (index % 3) {
    case 0: return region.mean_ci + 10.0;           // within the +-25 band
    case 1: return region.mean_ci * 1.25 + 30.0;    // current is lower: improved
    default: return std::max(region.mean_ci * 0.75 - 30.0, region.mean_ci * 0.1);  // worsened
  }
}

double base_rtt(const std::string& a, const std::string& b) {
  if (a == b) return 25.0;  // same geo group
  const auto key = a < b ? a + "|" + b : b + "|" + a;
  if (key == "Asia|Europe") return 180.0;
  if (key == "Europe|NorthAmerica") return 90.0;
  if (key == "Europe|Oceania") return 280.0;
  if (key == "Asia|NorthAmerica") return 150.0;
  if (key == "NorthAmerica|Oceania") return 170.0;
  if (key == "Asia|Oceania") return 120.0;
  throw std::invalid_argument("no base latency between " + a + " and " + b);
}

}  // namespace

void write_world_corpus(const std::filesystem::path& dir, std::size_t hours, std::uint64_t seed) {
  const auto& regions = world_regions();
  const EpochHour start = default_start();
  const EpochHour prev_start = start - static_cast<EpochHour>(hours);

  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto current = synth_trace(regions[i], hours, start, region_seed(seed, i));
    write_file_atomic(dir / "traces" / (regions[i].id + ".csv"), trace_to_csv(current));

    SyntheticRegion drifted = regions[i];
    drifted.mean_ci = previous_mean(regions[i], i);
    const auto previous = synth_trace(drifted, hours, prev_start, region_seed(seed ^ 0x5eedULL, i));
    write_file_atomic(dir / "previous" / (regions[i].id + ".csv"), trace_to_csv(previous));
  }

  nlohmann::json meta = nlohmann::json::object();
  for (const auto& r : regions)
    meta[r.id] = {{"continent", r.continent}, {"geo_group", r.geo_group}, {"cloud", nlohmann::json::array()}};
  write_file_atomic(dir / "regions.json", meta.dump(2) + "\n");

  // Directed latency with a small asymmetric jitter.
  Rng jitter(seed ^ 0x17a7e4c7ULL);
  std::string latency = "origin,destination,rtt_ms\n";
  for (const auto& a : regions)
    for (const auto& b : regions) {
      if (a.id == b.id) continue;
      const double rtt = base_rtt(a.geo_group, b.geo_group) + std::floor(jitter.uniform(0.0, 16.0));
      latency += a.id + "," + b.id + "," + format_double(rtt) + "\n";
    }
  write_file_atomic(dir / "latency.csv", latency);

  // Uneven load, uniform capacity. Loads are multiples of 1/60 via integer
  // shares so they sum to exactly 1 the same way on every platform.
  nlohmann::json load = nlohmann::json::object();
  nlohmann::json capacity = nlohmann::json::object();
  double share_sum = 0.0;
  for (std::size_t i = 0; i < regions.size(); ++i) share_sum += 1.0 + static_cast<double>(i % 5);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    load[regions[i].id] = (1.0 + static_cast<double>(i % 5)) / share_sum;
    capacity[regions[i].id] = 1.0 / static_cast<double>(regions.size());
  }
  write_file_atomic(dir / "load.json", load.dump(2) + "\n");
  write_file_atomic(dir / "capacity.json", capacity.dump(2) + "\n");

  const auto config = [&](const char* experiment, nlohmann::json extra) {
    nlohmann::json j = {{"experiment", experiment},
                        {"trace_dir", "../traces"},
                        {"region_metadata", "../regions.json"},
                        {"out_dir", std::string("../out/") + experiment}};
    j.update(extra);
    write_file_atomic(dir / "configs" / (std::string(experiment) + ".json"), j.dump(2) + "\n");
  };
  config("analyze", {{"trace_dir_previous", "../previous"}});
  config("temporal", {{"job_lengths", {0.01, 1.0, 6.0, 12.0, 24.0, 48.0, 96.0, 168.0}},
                      {"slack", {{"fixed_hours", {24.0}}, {"multipliers", {1.0, 2.0, 4.0}}}},
                      {"mix", "equal"},
                      {"parallelism", 4}});
  config("spatial", {{"load_weights", "../load.json"},
                     {"capacity", "../capacity.json"},
                     {"headroom", 1.25}});
  config("latency", {{"load_weights", "../load.json"},
                     {"latency_matrix", "../latency.csv"},
                     {"slo_grid_ms", {0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0}}});
}

}  // namespace carbonshift
