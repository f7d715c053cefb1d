#include "carbonshift/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "carbonshift/io.hpp"

namespace carbonshift {

RegionMetadata load_region_metadata(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument(path.string() + ": region metadata must be a JSON object");

  RegionMetadata meta;
  for (const auto& [region, node] : j.items()) {
    if (!node.is_object())
      throw std::invalid_argument(path.string() + ": entry for '" + region + "' must be an object");
    RegionMeta m;
    if (node.contains("continent")) m.continent = node.at("continent").get<std::string>();
    if (node.contains("geo_group")) m.geo_group = node.at("geo_group").get<std::string>();
    if (node.contains("cloud"))
      for (const auto& tag : node.at("cloud")) m.cloud_tags.push_back(tag.get<std::string>());
    meta[region] = std::move(m);
  }
  return meta;
}

RegionCatalog::RegionCatalog(std::vector<CarbonTrace> traces, RegionMetadata metadata) {
  if (traces.empty()) throw std::invalid_argument("catalog needs at least one trace");
  hours_ = traces.front().size();
  start_hour_ = traces.front().start_hour;
  if (hours_ == 0) throw std::invalid_argument("catalog traces must not be empty");

  for (auto& trace : traces) {
    if (trace.region_id.empty()) throw std::invalid_argument("catalog trace without region id");
    if (trace.size() != hours_ || trace.start_hour != start_hour_)
      throw std::invalid_argument("region '" + trace.region_id + "' is not aligned: covers " +
                                  format_utc_hour(trace.start_hour) + " + " + std::to_string(trace.size()) +
                                  " h, expected " + format_utc_hour(start_hour_) + " + " +
                                  std::to_string(hours_) + " h");
    if (entries_.count(trace.region_id))
      throw std::invalid_argument("duplicate region '" + trace.region_id + "'");

    Entry e;
    e.prefix.resize(hours_ + 1, 0.0);
    for (std::size_t i = 0; i < hours_; ++i) e.prefix[i + 1] = e.prefix[i] + trace.values[i];
    if (auto it = metadata.find(trace.region_id); it != metadata.end()) e.meta = it->second;
    e.trace = std::move(trace);
    ids_.push_back(e.trace.region_id);
    entries_[e.trace.region_id] = std::move(e);
  }
  std::sort(ids_.begin(), ids_.end());
}

bool RegionCatalog::contains(const std::string& id) const { return entries_.count(id) > 0; }

const RegionCatalog::Entry& RegionCatalog::entry(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::invalid_argument("unknown region '" + id + "'");
  return it->second;
}

const CarbonTrace& RegionCatalog::trace(const std::string& id) const { return entry(id).trace; }
const RegionMeta& RegionCatalog::meta(const std::string& id) const { return entry(id).meta; }

SlotRange RegionCatalog::checked(SlotRange interval) const {
  if (interval.begin >= interval.end || interval.end > hours_)
    throw std::invalid_argument("empty or out-of-range interval [" + std::to_string(interval.begin) +
                                ", " + std::to_string(interval.end) + ") on " + std::to_string(hours_) +
                                " h");
  return interval;
}

double RegionCatalog::interval_sum(const std::string& id, SlotRange interval) const {
  const auto& e = entry(id);
  checked(interval);
  return e.prefix[interval.end] - e.prefix[interval.begin];
}

double RegionCatalog::interval_mean(const std::string& id, SlotRange interval) const {
  return interval_sum(id, interval) / static_cast<double>(interval.size());
}

RegionCatalog RegionCatalog::restricted_to(const std::vector<std::string>& ids) const {
  std::set<std::string> wanted(ids.begin(), ids.end());
  if (wanted.empty()) throw std::invalid_argument("restricted_to: empty region set");
  std::vector<CarbonTrace> traces;
  RegionMetadata meta;
  for (const auto& id : wanted) {
    traces.push_back(trace(id));
    meta[id] = this->meta(id);
  }
  return RegionCatalog(std::move(traces), std::move(meta));
}

void LatencyMatrix::set(const std::string& origin, const std::string& destination, double rtt_ms) {
  if (origin.empty() || destination.empty())
    throw std::invalid_argument("latency entry with empty region id");
  if (rtt_ms < 0.0 || !std::isfinite(rtt_ms))
    throw std::invalid_argument("latency " + origin + " -> " + destination + " must be non-negative");
  if (origin == destination && rtt_ms != 0.0)
    throw std::invalid_argument("latency " + origin + " -> " + origin + " must be 0");
  rtt_ms_[{origin, destination}] = rtt_ms;
}

bool LatencyMatrix::has(const std::string& origin, const std::string& destination) const {
  return origin == destination || rtt_ms_.count({origin, destination}) > 0;
}

double LatencyMatrix::rtt(const std::string& origin, const std::string& destination) const {
  if (origin == destination) return 0.0;
  auto it = rtt_ms_.find({origin, destination});
  if (it == rtt_ms_.end())
    throw std::invalid_argument("no latency entry for " + origin + " -> " + destination);
  return it->second;
}

double LatencyMatrix::max_rtt() const {
  double m = 0.0;
  for (const auto& [pair, rtt] : rtt_ms_) m = std::max(m, rtt);
  return m;
}

LatencyMatrix load_latency_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  LatencyMatrix matrix;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::set<std::pair<std::string, std::string>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_csv_line(line);
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (!saw_header) {
      if (fields.size() != 3 || fields[0] != "origin" || fields[1] != "destination" || fields[2] != "rtt_ms")
        throw std::invalid_argument(path.string() + ": line " + std::to_string(line_no) +
                                    ": expected header 'origin,destination,rtt_ms'");
      saw_header = true;
      continue;
    }
    if (fields.size() != 3)
      throw std::invalid_argument(path.string() + ": line " + std::to_string(line_no) +
                                  ": expected 3 fields");
    double rtt = 0.0;
    const char* end = fields[2].data() + fields[2].size();
    auto [p, ec] = std::from_chars(fields[2].data(), end, rtt);
    if (ec != std::errc() || p != end)
      throw std::invalid_argument(path.string() + ": line " + std::to_string(line_no) + ": bad rtt_ms '" +
                                  fields[2] + "'");
    if (!seen.insert({fields[0], fields[1]}).second)
      throw std::invalid_argument(path.string() + ": duplicate pair " + fields[0] + " -> " + fields[1]);
    matrix.set(fields[0], fields[1], rtt);
  }
  if (!saw_header) throw std::invalid_argument(path.string() + ": empty latency file");
  return matrix;
}

namespace {

std::vector<std::string> checked_allowed(const RegionCatalog& catalog, const std::string& origin,
                                         const std::vector<std::string>& allowed) {
  if (allowed.empty()) throw std::invalid_argument("empty candidate set for origin '" + origin + "'");
  std::vector<std::string> ids = allowed;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const auto& id : ids)
    if (!catalog.contains(id)) throw std::invalid_argument("unknown region '" + id + "'");
  if (!std::binary_search(ids.begin(), ids.end(), origin))
    throw std::invalid_argument("candidate set for origin '" + origin + "' does not include it");
  return ids;
}

// Slot-order sum of one region over an interval. Plans report emissions from
// plain sums, not prefix differences, so a per-slot plan that never beats a
// single move cannot round above it.
double direct_sum(const RegionCatalog& catalog, const std::string& id, SlotRange interval) {
  const auto& v = catalog.trace(id).values;
  double e = 0.0;
  for (std::size_t t = interval.begin; t < interval.end; ++t) e += v[t];
  return e;
}

}  // namespace

MigrationPlan plan_one_migration(const RegionCatalog& catalog, const std::string& origin,
                                 const std::vector<std::string>& allowed, SlotRange interval) {
  const auto ids = checked_allowed(catalog, origin, allowed);
  std::string best = ids.front();
  double best_mean = catalog.interval_mean(best, interval);
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const double m = catalog.interval_mean(ids[i], interval);
    if (m < best_mean) {
      best_mean = m;
      best = ids[i];
    }
  }
  MigrationPlan plan;
  plan.origin = origin;
  plan.interval = interval;
  plan.per_slot = false;
  plan.destinations = {best};
  plan.emissions = direct_sum(catalog, best, interval);
  return plan;
}

MigrationPlan plan_infinite_migration(const RegionCatalog& catalog, const std::string& origin,
                                      const std::vector<std::string>& allowed, SlotRange interval) {
  const auto ids = checked_allowed(catalog, origin, allowed);

  std::vector<const std::vector<double>*> values;
  values.reserve(ids.size());
  for (const auto& id : ids) values.push_back(&catalog.trace(id).values);

  catalog.interval_sum(origin, interval);  // bounds check

  MigrationPlan plan;
  plan.origin = origin;
  plan.interval = interval;
  plan.per_slot = true;
  plan.destinations.reserve(interval.size());
  for (std::size_t t = interval.begin; t < interval.end; ++t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ids.size(); ++i)
      if ((*values[i])[t] < (*values[best])[t]) best = i;
    plan.destinations.push_back(ids[best]);
    plan.emissions += (*values[best])[t];
  }
  return plan;
}

std::vector<std::vector<double>> savings_matrix(const RegionCatalog& catalog,
                                                const std::vector<std::string>& regions,
                                                SlotRange interval) {
  if (regions.size() < 2) throw std::invalid_argument("savings_matrix needs at least two regions");
  std::set<std::string> distinct(regions.begin(), regions.end());
  if (distinct.size() != regions.size()) throw std::invalid_argument("savings_matrix: duplicate region");

  std::vector<double> means;
  means.reserve(regions.size());
  for (const auto& id : regions) {
    const double m = catalog.interval_mean(id, interval);
    if (!(m > 0.0))
      throw std::invalid_argument("savings_matrix: region '" + id + "' has non-positive mean intensity");
    means.push_back(m);
  }

  std::vector<std::vector<double>> matrix(regions.size(), std::vector<double>(regions.size(), 0.0));
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = 0; j < regions.size(); ++j)
      matrix[i][j] = i == j ? 0.0 : (means[i] - means[j]) / means[i];
  return matrix;
}

namespace {

// Regions sorted greenest first over the interval, id on ties.
std::vector<std::pair<double, std::string>> carbon_ranking(const RegionCatalog& catalog,
                                                           SlotRange interval) {
  std::vector<std::pair<double, std::string>> ranking;
  ranking.reserve(catalog.region_ids().size());
  for (const auto& id : catalog.region_ids())
    ranking.push_back({catalog.interval_mean(id, interval), id});
  std::sort(ranking.begin(), ranking.end());
  return ranking;
}

}  // namespace

AdjacentRankingResult adjacent_ranking_savings(const RegionCatalog& catalog,
                                               const OriginWeights& load, SlotRange interval) {
  validate_origin_weights(load);
  for (const auto& [region, weight] : load.weights)
    if (!catalog.contains(region)) throw std::invalid_argument("unknown region '" + region + "'");

  const auto ranking = carbon_ranking(catalog, interval);
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < ranking.size(); ++i) rank[ranking[i].second] = i;

  AdjacentRankingResult result;
  double baseline = 0.0;
  double shifted = 0.0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const auto& [mean, region] = ranking[i];
    auto it = load.weights.find(region);
    if (it == load.weights.end() || it->second == 0.0) continue;
    const double w = it->second;
    const auto& [dest_mean, dest] = ranking[i == 0 ? 0 : i - 1];
    result.moves.push_back({region, dest, w, mean, dest_mean});
    baseline += w * mean;
    shifted += w * dest_mean;
  }
  result.savings_fraction = baseline > 0.0 ? (baseline - shifted) / baseline : 0.0;
  return result;
}

CapacityPlanResult plan_capacity_constrained(const RegionCatalog& catalog, const CapacityModel& model,
                                             SlotRange interval) {
  validate_origin_weights(model.load);
  if (!(model.headroom >= 0.0) || !std::isfinite(model.headroom))
    throw std::invalid_argument("headroom must be a non-negative multiplier");
  for (const auto& [region, weight] : model.load.weights)
    if (!catalog.contains(region)) throw std::invalid_argument("unknown region '" + region + "'");
  for (const auto& id : catalog.region_ids()) {
    auto it = model.capacity.find(id);
    if (it == model.capacity.end())
      throw std::invalid_argument("no capacity entry for region '" + id + "'");
    if (it->second < 0.0 || !std::isfinite(it->second))
      throw std::invalid_argument("capacity for '" + id + "' must be non-negative");
  }

  const auto ranking = carbon_ranking(catalog, interval);

  std::map<std::string, double> resident;
  for (const auto& [mean, id] : ranking) {
    auto it = model.load.weights.find(id);
    resident[id] = it == model.load.weights.end() ? 0.0 : it->second;
  }

  CapacityPlanResult result;
  for (const auto& [mean, id] : ranking) result.baseline_emissions += resident[id] * mean;

  // Free capacity never regrows when a source drains: the resident term in
  // the capacity rule is the submitted load, not what remains.
  std::map<std::string, double> free;
  for (const auto& [mean, id] : ranking)
    free[id] = std::max(0.0, model.capacity.at(id) * model.headroom - resident[id]);

  std::map<std::string, double> remaining = resident;
  for (std::size_t s = ranking.size(); s-- > 0;) {  // brownest source first
    const auto& [source_mean, source] = ranking[s];
    double& rem = remaining[source];
    if (rem <= 0.0) continue;
    for (std::size_t d = 0; d < s && rem > 0.0; ++d) {  // greenest destination first
      const auto& [dest_mean, dest] = ranking[d];
      if (!(dest_mean < source_mean)) break;  // ranking is sorted; nothing greener remains
      double& cap = free[dest];
      if (cap <= 0.0) continue;
      const double amount = std::min(rem, cap);
      rem -= amount;
      cap -= amount;
      result.moves.push_back({source, dest, amount});
    }
  }

  double constrained = 0.0;
  std::map<std::string, double> after = remaining;
  for (const auto& move : result.moves) after[move.destination] += move.amount;
  for (const auto& [mean, id] : ranking) constrained += after[id] * mean;
  result.constrained_emissions = constrained;

  double unconstrained = 0.0;
  const double green_mean = ranking.front().first;
  for (const auto& [mean, id] : ranking) unconstrained += resident[id] * std::min(mean, green_mean);

  if (result.baseline_emissions > 0.0) {
    result.constrained_savings = (result.baseline_emissions - constrained) / result.baseline_emissions;
    result.unconstrained_savings =
        (result.baseline_emissions - unconstrained) / result.baseline_emissions;
  }
  return result;
}

LatencyRoutingResult latency_routing(const RegionCatalog& catalog, const LatencyMatrix& latency,
                                     const OriginWeights& load, double slo_ms, SlotRange interval,
                                     double global_avg) {
  if (!(slo_ms >= 0.0) || !std::isfinite(slo_ms))
    throw std::invalid_argument("slo_ms must be non-negative");
  if (!(global_avg > 0.0)) throw std::invalid_argument("global average must be positive");
  validate_origin_weights(load);

  LatencyRoutingResult result;
  double weighted_abs = 0.0;
  double total_weight = 0.0;
  for (const auto& [origin, weight] : load.weights) {
    if (weight == 0.0) continue;
    if (!catalog.contains(origin)) throw std::invalid_argument("unknown region '" + origin + "'");

    std::vector<std::string> allowed;
    for (const auto& candidate : catalog.region_ids()) {
      if (candidate == origin) {
        allowed.push_back(candidate);
        continue;
      }
      if (!latency.has(origin, candidate))
        throw std::invalid_argument("no latency entry for " + origin + " -> " + candidate);
      if (latency.rtt(origin, candidate) <= slo_ms) allowed.push_back(candidate);
    }

    const MigrationPlan plan = plan_one_migration(catalog, origin, allowed, interval);
    const double abs =
        catalog.interval_mean(origin, interval) - catalog.interval_mean(plan.destinations[0], interval);
    result.routes.push_back({origin, plan.destinations[0], abs});
    weighted_abs += weight * abs;
    total_weight += weight;
  }
  if (total_weight <= 0.0) throw std::invalid_argument("latency_routing: no load");
  result.savings_rel_global_pct = 100.0 * weighted_abs / (total_weight * global_avg);
  return result;
}

}  // namespace carbonshift
