#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "carbonshift/metrics.hpp"
#include "carbonshift/trace.hpp"
#include "carbonshift/workload.hpp"

namespace carbonshift {

struct RegionMeta {
  std::string continent;
  std::string geo_group;
  std::vector<std::string> cloud_tags;
};
using RegionMetadata = std::map<std::string, RegionMeta>;

// JSON object: {"REGION": {"continent": "...", "geo_group": "...", "cloud": ["..."]}}
RegionMetadata load_region_metadata(const std::filesystem::path& path);

// A set of regions with aligned traces: same start hour, same length.
class RegionCatalog {
 public:
  RegionCatalog() = default;
  RegionCatalog(std::vector<CarbonTrace> traces, RegionMetadata metadata = {});

  const std::vector<std::string>& region_ids() const { return ids_; }  // sorted
  bool contains(const std::string& id) const;
  const CarbonTrace& trace(const std::string& id) const;
  const RegionMeta& meta(const std::string& id) const;  // empty meta when none was given
  std::size_t hours() const { return hours_; }
  EpochHour start_hour() const { return start_hour_; }
  SlotRange full_range() const { return {0, hours_}; }

  double interval_sum(const std::string& id, SlotRange interval) const;
  double interval_mean(const std::string& id, SlotRange interval) const;

  RegionCatalog restricted_to(const std::vector<std::string>& ids) const;

 private:
  struct Entry {
    CarbonTrace trace;
    RegionMeta meta;
    std::vector<double> prefix;  // prefix[i] = sum of the first i values
  };
  const Entry& entry(const std::string& id) const;
  SlotRange checked(SlotRange interval) const;

  std::vector<std::string> ids_;
  std::map<std::string, Entry> entries_;
  std::size_t hours_ = 0;
  EpochHour start_hour_ = 0;
};

// Directed round-trip times; rtt(r, r) is implicitly 0.
class LatencyMatrix {
 public:
  void set(const std::string& origin, const std::string& destination, double rtt_ms);
  bool has(const std::string& origin, const std::string& destination) const;
  double rtt(const std::string& origin, const std::string& destination) const;
  double max_rtt() const;

 private:
  std::map<std::pair<std::string, std::string>, double> rtt_ms_;
};

// CSV with header "origin,destination,rtt_ms".
LatencyMatrix load_latency_matrix(const std::filesystem::path& path);

// Where a unit of load runs over an interval. destinations holds one region
// for a whole-interval placement or one per slot for per-slot placement.
struct MigrationPlan {
  std::string origin;
  SlotRange interval;
  bool per_slot = false;
  std::vector<std::string> destinations;
  double emissions = 0.0;  // summed over the interval, unit load
};

// Single move for the whole interval: the allowed region with the lowest
// interval mean, lexicographic on ties. allowed must contain the origin.
MigrationPlan plan_one_migration(const RegionCatalog& catalog, const std::string& origin,
                                 const std::vector<std::string>& allowed, SlotRange interval);

// Fresh choice every slot: the allowed region with the lowest intensity in
// that slot, lexicographic on ties.
MigrationPlan plan_infinite_migration(const RegionCatalog& catalog, const std::string& origin,
                                      const std::vector<std::string>& allowed, SlotRange interval);

// entry[i][j] = (mean_i - mean_j) / mean_i over the interval; positive when
// moving i -> j saves. Every origin mean must be positive.
std::vector<std::vector<double>> savings_matrix(const RegionCatalog& catalog,
                                                const std::vector<std::string>& regions,
                                                SlotRange interval);

// Every region's load moves one step down the carbon ranking of the whole
// catalog; the greenest region keeps its load.
struct AdjacentRankingResult {
  struct Move {
    std::string origin;
    std::string destination;
    double load = 0.0;
    double origin_mean = 0.0;
    double destination_mean = 0.0;
  };
  std::vector<Move> moves;         // one per region with load, rank order
  double savings_fraction = 0.0;   // of load-weighted baseline emissions
};
AdjacentRankingResult adjacent_ranking_savings(const RegionCatalog& catalog,
                                               const OriginWeights& load, SlotRange interval);

struct CapacityModel {
  OriginWeights load;                      // resident load per region
  std::map<std::string, double> capacity;  // compute capacity per region
  double headroom = 1.0;                   // multiplier on capacity; > 1 overcommits
};

// Greedy reassignment toward greener regions under capacity: sources are
// drained brownest first, each into the greenest strictly-greener region with
// free capacity. The greedy plan is optimal here because moving any unit of
// load to a greener slot saves independently of the rest of the plan.
struct CapacityPlanResult {
  struct Move {
    std::string source;
    std::string destination;
    double amount = 0.0;
  };
  std::vector<Move> moves;
  double baseline_emissions = 0.0;       // load-weighted mean intensity
  double constrained_emissions = 0.0;
  double constrained_savings = 0.0;      // fraction of baseline
  double unconstrained_savings = 0.0;    // everything to the greenest region
};
CapacityPlanResult plan_capacity_constrained(const RegionCatalog& catalog, const CapacityModel& model,
                                             SlotRange interval);

// Keeps each origin's load within its latency budget: candidate destinations
// are the regions within slo_ms round-trip, placement per origin follows
// plan_one_migration. Savings are load-weighted absolute savings per hour
// against the global average intensity.
struct LatencyRoutingResult {
  struct Route {
    std::string origin;
    std::string destination;
    double savings_abs = 0.0;  // origin mean - destination mean
  };
  std::vector<Route> routes;
  double savings_rel_global_pct = 0.0;
};
LatencyRoutingResult latency_routing(const RegionCatalog& catalog, const LatencyMatrix& latency,
                                     const OriginWeights& load, double slo_ms, SlotRange interval,
                                     double global_avg = default_global_average_ci);

}  // namespace carbonshift
