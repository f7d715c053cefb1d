#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "carbonshift/io.hpp"
#include "carbonshift/spatial.hpp"
#include "carbonshift/synthetic.hpp"
#include "carbonshift/trace.hpp"

using namespace carbonshift;

TEST_CASE("world has 20 regions across all quadrants") {
  const auto& regions = world_regions();
  REQUIRE(regions.size() == 20);
  std::set<std::string> ids;
  for (const auto& r : regions) {
    CHECK(r.mean_ci > 0.0);
    CHECK(r.daily_amplitude + r.weekly_amplitude + r.noise_amplitude < 1.0);
    ids.insert(r.id);
  }
  CHECK(ids.size() == 20);

  // Quadrants: mean above/below the corpus average crossed with daily
  // amplitude above/below, all populated.
  double avg_mean = 0.0;
  for (const auto& r : regions) avg_mean += r.mean_ci / regions.size();
  bool lo_flat = false, lo_var = false, hi_flat = false, hi_var = false;
  for (const auto& r : regions) {
    const bool hi = r.mean_ci > avg_mean;
    const bool var = r.daily_amplitude > 0.2;
    (hi ? (var ? hi_var : hi_flat) : (var ? lo_var : lo_flat)) = true;
  }
  CHECK(lo_flat);
  CHECK(lo_var);
  CHECK(hi_flat);
  CHECK(hi_var);
}

TEST_CASE("synth_trace is deterministic and respects bounds") {
  const auto& region = world_regions()[0];
  const CarbonTrace a = synth_trace(region, 168, 0, 7);
  const CarbonTrace b = synth_trace(region, 168, 0, 7);
  CHECK(a.values == b.values);
  const CarbonTrace c = synth_trace(region, 168, 0, 8);
  CHECK(a.values != c.values);

  const double bound = region.mean_ci *
      (1.0 + region.daily_amplitude + region.weekly_amplitude + region.noise_amplitude);
  for (double v : a.values) {
    CHECK(v >= 0.0);
    CHECK(v <= bound + 1e-9);
  }
}

TEST_CASE("one world region is pointwise below all others") {
  const RegionCatalog catalog = make_world_catalog(24 * 14, 42);
  double eu01_max = 0.0;
  for (double v : catalog.trace("EU01").values) eu01_max = std::max(eu01_max, v);
  for (const auto& id : catalog.region_ids()) {
    if (id == "EU01") continue;
    double lo = 1e18;
    for (double v : catalog.trace(id).values) lo = std::min(lo, v);
    CHECK(eu01_max < lo);
  }
}

TEST_CASE("write_world_corpus produces a loadable corpus") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_world_test";
  std::filesystem::remove_all(dir);
  write_world_corpus(dir, 24 * 14, 9);

  const auto traces = load_traces_dir(dir / "traces");
  CHECK(traces.size() == 20);
  const auto previous = load_traces_dir(dir / "previous");
  CHECK(previous.size() == 20);
  // The previous period ends where the current one starts.
  CHECK(previous[0].start_hour + static_cast<EpochHour>(previous[0].size()) ==
        traces[0].start_hour);

  const RegionMetadata meta = load_region_metadata(dir / "regions.json");
  CHECK(meta.size() == 20);
  const LatencyMatrix latency = load_latency_matrix(dir / "latency.csv");
  CHECK(latency.rtt("EU01", "NA01") >= 90.0);
  CHECK(latency.max_rtt() <= 300.0);

  for (const char* name : {"configs/analyze.json", "configs/temporal.json",
                           "configs/spatial.json", "configs/latency.json", "load.json",
                           "capacity.json"})
    CHECK(std::filesystem::exists(dir / name));

  // Same seed, same bytes.
  const std::string first = read_text_file(dir / "traces" / "EU01.csv");
  write_world_corpus(dir, 24 * 14, 9);
  CHECK(read_text_file(dir / "traces" / "EU01.csv") == first);
  std::filesystem::remove_all(dir);
}
