#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "carbonshift/io.hpp"
#include "carbonshift/rng.hpp"
#include "carbonshift/spatial.hpp"

using namespace carbonshift;

namespace {

CarbonTrace make_trace(const std::string& id, std::vector<double> values) {
  CarbonTrace t;
  t.region_id = id;
  t.start_hour = 0;
  t.values = std::move(values);
  return t;
}

RegionCatalog two_region_square_waves() {
  // Anti-phase square waves with the same mean: spatially flat on average,
  // but per-slot hopping always finds the low side.
  std::vector<double> a, b;
  for (int i = 0; i < 48; ++i) {
    a.push_back(i % 2 == 0 ? 100.0 : 300.0);
    b.push_back(i % 2 == 0 ? 300.0 : 100.0);
  }
  return RegionCatalog({make_trace("A", a), make_trace("B", b)});
}

}  // namespace

TEST_CASE("catalog validates alignment and lookups") {
  const RegionCatalog catalog({make_trace("B", {1, 2, 3}), make_trace("A", {4, 5, 6})});
  CHECK(catalog.region_ids() == std::vector<std::string>{"A", "B"});
  CHECK(catalog.hours() == 3);
  CHECK(catalog.contains("A"));
  CHECK(!catalog.contains("C"));
  CHECK(catalog.interval_sum("A", {0, 3}) == 15.0);
  CHECK(catalog.interval_mean("B", {1, 3}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(catalog.trace("C"), std::invalid_argument);
  CHECK_THROWS_AS(catalog.interval_sum("A", {0, 4}), std::invalid_argument);

  CHECK_THROWS_AS(RegionCatalog({make_trace("A", {1}), make_trace("B", {1, 2})}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RegionCatalog({make_trace("A", {1}), make_trace("A", {2})}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RegionCatalog(std::vector<CarbonTrace>{}), std::invalid_argument);

  const RegionCatalog sub = catalog.restricted_to({"A"});
  CHECK(sub.region_ids() == std::vector<std::string>{"A"});
  CHECK_THROWS_AS(catalog.restricted_to({"A", "C"}), std::invalid_argument);
}

TEST_CASE("latency matrix is directed with implicit zero self-loops") {
  LatencyMatrix m;
  m.set("A", "B", 80.0);
  m.set("B", "A", 90.0);
  CHECK(m.rtt("A", "B") == 80.0);
  CHECK(m.rtt("B", "A") == 90.0);
  CHECK(m.rtt("A", "A") == 0.0);
  CHECK(m.has("A", "A"));
  CHECK(!m.has("A", "C"));
  CHECK(m.max_rtt() == 90.0);
  CHECK_THROWS_AS(m.set("A", "B", -1.0), std::invalid_argument);
  CHECK_THROWS_AS(m.set("A", "A", 5.0), std::invalid_argument);
  CHECK_THROWS_AS(m.rtt("A", "C"), std::invalid_argument);
}

TEST_CASE("load_latency_matrix reads the csv format") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_latency_test";
  const auto path = dir / "latency.csv";
  write_file_atomic(path, "origin,destination,rtt_ms\nA,B,80\nB,A,90\n");
  const LatencyMatrix m = load_latency_matrix(path);
  CHECK(m.rtt("A", "B") == 80.0);

  write_file_atomic(path, "origin,destination,rtt_ms\nA,B,80\nA,B,90\n");
  CHECK_THROWS_AS(load_latency_matrix(path), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("one migration picks the lowest interval mean") {
  const RegionCatalog catalog({make_trace("A", {400, 400}), make_trace("B", {100, 100}),
                               make_trace("C", {100, 100})});
  const MigrationPlan plan = plan_one_migration(catalog, "A", catalog.region_ids(), {0, 2});
  CHECK(plan.origin == "A");
  CHECK(!plan.per_slot);
  REQUIRE(plan.destinations.size() == 1);
  CHECK(plan.destinations[0] == "B");  // lexicographic tie-break
  CHECK(plan.emissions == 200.0);

  CHECK_THROWS_AS(plan_one_migration(catalog, "A", {"B", "C"}, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(plan_one_migration(catalog, "A", {"A", "X"}, {0, 2}), std::invalid_argument);
}

TEST_CASE("infinite migration beats one migration on anti-phase waves") {
  const RegionCatalog catalog = two_region_square_waves();
  const SlotRange interval = catalog.full_range();
  const MigrationPlan one = plan_one_migration(catalog, "A", catalog.region_ids(), interval);
  const MigrationPlan inf = plan_infinite_migration(catalog, "A", catalog.region_ids(), interval);

  // Equal means: staying put is already optimal for a single placement.
  CHECK(one.emissions == doctest::Approx(48 * 200.0));
  // Hopping takes the 100 side every hour.
  CHECK(inf.emissions == doctest::Approx(48 * 100.0));
  CHECK(inf.per_slot);
  CHECK(inf.destinations.size() == 48);
  CHECK(inf.destinations[0] == "A");
  CHECK(inf.destinations[1] == "B");
  CHECK(inf.emissions <= one.emissions);
}

TEST_CASE("savings matrix for the 400/100 pair") {
  const RegionCatalog catalog({make_trace("A", {400, 400}), make_trace("B", {100, 100})});
  const auto matrix = savings_matrix(catalog, catalog.region_ids(), {0, 2});
  CHECK(matrix[0][0] == 0.0);
  CHECK(matrix[0][1] == doctest::Approx(0.75));   // 400 -> 100
  CHECK(matrix[1][0] == doctest::Approx(-3.0));   // 100 -> 400
  CHECK(matrix[1][1] == 0.0);

  CHECK_THROWS_AS(savings_matrix(catalog, {"A"}, {0, 2}), std::invalid_argument);
}

TEST_CASE("adjacent ranking moves each region one step greener") {
  const RegionCatalog catalog({make_trace("A", {300, 300}), make_trace("B", {100, 100}),
                               make_trace("C", {200, 200})});
  OriginWeights load;
  load.weights = {{"A", 0.5}, {"B", 0.25}, {"C", 0.25}};
  const AdjacentRankingResult r = adjacent_ranking_savings(catalog, load, {0, 2});
  REQUIRE(r.moves.size() == 3);
  // Ranking greenest first: B, C, A. B stays, C -> B, A -> C.
  CHECK(r.moves[0].origin == "B");
  CHECK(r.moves[0].destination == "B");
  CHECK(r.moves[1].origin == "C");
  CHECK(r.moves[1].destination == "B");
  CHECK(r.moves[2].origin == "A");
  CHECK(r.moves[2].destination == "C");

  // Baseline 0.5*300 + 0.25*100 + 0.25*200 = 225 per hour.
  // Shifted 0.5*200 + 0.25*100 + 0.25*100 = 150 per hour.
  CHECK(r.savings_fraction == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("adjacent ranking with two equal loads") {
  const RegionCatalog catalog({make_trace("HI", {300, 300}), make_trace("LO", {100, 100})});
  OriginWeights load;
  load.weights = {{"HI", 0.5}, {"LO", 0.5}};
  const AdjacentRankingResult r = adjacent_ranking_savings(catalog, load, {0, 2});
  // Baseline 200, shifted 100: half the emissions.
  CHECK(r.savings_fraction == doctest::Approx(0.5));
}

TEST_CASE("capacity constrained matches a hand-built plan") {
  const RegionCatalog catalog({make_trace("A", {300, 300}), make_trace("B", {100, 100}),
                               make_trace("C", {200, 200})});
  CapacityModel model;
  model.load.weights = {{"A", 0.6}, {"B", 0.2}, {"C", 0.2}};
  model.capacity = {{"A", 0.6}, {"B", 0.5}, {"C", 0.2}};
  model.headroom = 1.0;

  const CapacityPlanResult plan = plan_capacity_constrained(catalog, model, {0, 2});
  // B has 0.3 free: the brownest source A sends 0.3 to the greenest region B.
  REQUIRE(plan.moves.size() == 1);
  CHECK(plan.moves[0].source == "A");
  CHECK(plan.moves[0].destination == "B");
  CHECK(plan.moves[0].amount == doctest::Approx(0.3));

  // Baseline 0.6*300 + 0.2*100 + 0.2*200 = 240.
  // After: 0.3*300 + 0.5*100 + 0.2*200 = 180.
  CHECK(plan.baseline_emissions == doctest::Approx(240.0));
  CHECK(plan.constrained_emissions == doctest::Approx(180.0));
  CHECK(plan.constrained_savings == doctest::Approx(0.25));
  // Unconstrained: everything at B's mean, 100 vs 240.
  CHECK(plan.unconstrained_savings == doctest::Approx(1.0 - 100.0 / 240.0));
  CHECK(plan.constrained_savings <= plan.unconstrained_savings);
}

TEST_CASE("capacity headroom scales free space") {
  const RegionCatalog catalog({make_trace("A", {300, 300}), make_trace("B", {100, 100})});
  CapacityModel model;
  model.load.weights = {{"A", 0.5}, {"B", 0.5}};
  model.capacity = {{"A", 0.5}, {"B", 0.5}};

  // capacity == load leaves nothing free.
  CHECK(plan_capacity_constrained(catalog, model, {0, 2}).moves.empty());

  // 1.2x headroom frees 0.1 at B.
  model.headroom = 1.2;
  const CapacityPlanResult plan = plan_capacity_constrained(catalog, model, {0, 2});
  REQUIRE(plan.moves.size() == 1);
  CHECK(plan.moves[0].amount == doctest::Approx(0.1));

  CHECK_THROWS_AS([&] {
    CapacityModel bad = model;
    bad.capacity.erase("A");
    return plan_capacity_constrained(catalog, bad, {0, 2});
  }(), std::invalid_argument);
}

TEST_CASE("capacity greedy matches brute force on random instances") {
  // Loads and capacities on a 0.05 grid over up to 4 regions; the exhaustive
  // search enumerates every distribution of each source's load on that grid.
  Rng rng(515);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t regions = 2 + rng.index(3);
    std::vector<CarbonTrace> traces;
    CapacityModel model;
    std::vector<double> means;
    std::vector<std::string> ids;
    int load_units = 20;
    for (std::size_t r = 0; r < regions; ++r) {
      const std::string id(1, static_cast<char>('A' + r));
      const double mean = 50.0 + 50.0 * static_cast<double>(rng.index(10));
      traces.push_back(make_trace(id, {mean, mean}));
      means.push_back(mean);
      ids.push_back(id);
      const int units = r + 1 == regions ? load_units
                                         : static_cast<int>(rng.index(load_units + 1));
      load_units -= units;
      model.load.weights[id] = 0.05 * units;
      model.capacity[id] = 0.05 * static_cast<double>(rng.index(21));
    }
    model.headroom = 1.0;

    const RegionCatalog catalog(traces);
    const CapacityPlanResult plan = plan_capacity_constrained(catalog, model, {0, 2});

    // Brute force: assign load in 0.05 units to regions, respecting capacity,
    // keeping overflow at home allowed only for the origin's own load.
    // State: remaining free units per region; recurse over sources.
    std::vector<int> free_units(regions);
    for (std::size_t r = 0; r < regions; ++r) {
      const double resident = model.load.weights[ids[r]];
      free_units[r] = std::max(
          0, static_cast<int>(std::llround((model.capacity[ids[r]] - resident) / 0.05)));
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> source_units(regions);
    for (std::size_t r = 0; r < regions; ++r)
      source_units[r] = static_cast<int>(std::llround(model.load.weights[ids[r]] / 0.05));

    // Recursive enumeration: for each source, split its units across all
    // strictly greener regions (or keep at home).
    std::function<void(std::size_t, std::vector<int>&, double)> recurse =
        [&](std::size_t src, std::vector<int>& free, double emissions) {
          if (src == regions) {
            best = std::min(best, emissions);
            return;
          }
          const int units = source_units[src];
          // Destinations strictly greener than the source.
          std::vector<std::size_t> dests;
          for (std::size_t d = 0; d < regions; ++d)
            if (means[d] < means[src]) dests.push_back(d);
          // Enumerate how many units go to each destination.
          std::function<void(std::size_t, int, double)> split = [&](std::size_t di, int left,
                                                                    double acc) {
            if (di == dests.size()) {
              recurse(src + 1, free,
                      emissions + acc + 0.05 * left * means[src] * 2.0);
              return;
            }
            const std::size_t d = dests[di];
            for (int give = 0; give <= std::min(left, free[d]); ++give) {
              free[d] -= give;
              split(di + 1, left - give, acc + 0.05 * give * means[d] * 2.0);
              free[d] += give;
            }
          };
          split(0, units, 0.0);
        };
    recurse(0, free_units, 0.0);

    CHECK(plan.constrained_emissions * 2.0 == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("latency routing respects the budget and aggregates savings") {
  const RegionCatalog catalog({make_trace("A", {400, 400}), make_trace("B", {100, 100}),
                               make_trace("C", {50, 50})});
  LatencyMatrix latency;
  latency.set("A", "B", 80.0);
  latency.set("B", "A", 80.0);
  latency.set("A", "C", 200.0);
  latency.set("C", "A", 200.0);
  latency.set("B", "C", 150.0);
  latency.set("C", "B", 150.0);
  OriginWeights load;
  load.weights = {{"A", 1.0}};

  const SlotRange interval = catalog.full_range();
  // SLO 0: stay home.
  const LatencyRoutingResult at0 = latency_routing(catalog, latency, load, 0.0, interval);
  REQUIRE(at0.routes.size() == 1);
  CHECK(at0.routes[0].destination == "A");
  CHECK(at0.savings_rel_global_pct == 0.0);

  // SLO 100: B is reachable, C is not.
  const LatencyRoutingResult at100 = latency_routing(catalog, latency, load, 100.0, interval);
  CHECK(at100.routes[0].destination == "B");
  CHECK(at100.savings_rel_global_pct ==
        doctest::Approx(100.0 * (400.0 - 100.0) / default_global_average_ci));

  // SLO 200: C unlocks.
  const LatencyRoutingResult at200 = latency_routing(catalog, latency, load, 200.0, interval);
  CHECK(at200.routes[0].destination == "C");

  // A curve over growing budgets never decreases.
  double last = -1.0;
  for (double slo : {0.0, 50.0, 100.0, 150.0, 200.0, 300.0}) {
    const double s = latency_routing(catalog, latency, load, slo, interval).savings_rel_global_pct;
    CHECK(s >= last);
    last = s;
  }

  // Unknown latency pairs are an error when a candidate needs them.
  LatencyMatrix partial;
  partial.set("A", "B", 80.0);
  CHECK_THROWS_AS(latency_routing(catalog, partial, load, 100.0, interval), std::invalid_argument);
}

TEST_CASE("region metadata loads optional fields") {
  const auto dir = std::filesystem::temp_directory_path() / "carbonshift_meta_test";
  const auto path = dir / "regions.json";
  write_file_atomic(path, R"({
    "DE": {"continent": "Europe", "geo_group": "EU", "cloud": ["provider-a"]},
    "XX": {}
  })");
  const RegionMetadata meta = load_region_metadata(path);
  CHECK(meta.at("DE").continent == "Europe");
  CHECK(meta.at("DE").cloud_tags == std::vector<std::string>{"provider-a"});
  CHECK(meta.at("XX").geo_group.empty());
  std::filesystem::remove_all(dir);
}
