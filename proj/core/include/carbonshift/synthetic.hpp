#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "carbonshift/spatial.hpp"
#include "carbonshift/trace.hpp"

namespace carbonshift {

// Blueprint for one synthetic region: a positive mean intensity modulated by
// daily and weekly sine components plus bounded relative noise.
struct SyntheticRegion {
  std::string id;
  std::string continent;
  std::string geo_group;
  double mean_ci = 0.0;
  double daily_amplitude = 0.0;   // relative
  double weekly_amplitude = 0.0;  // relative
  double noise_amplitude = 0.01;  // relative, uniform in [-amp, amp]
  int phase_hours = 0;
};

// The 20-region demo world. Means and amplitudes are spread so that all four
// mean/variability quadrants are populated and one region stays below every
// other region at every hour.
const std::vector<SyntheticRegion>& world_regions();

CarbonTrace synth_trace(const SyntheticRegion& region, std::size_t hours, EpochHour start_hour,
                        std::uint64_t seed);

RegionCatalog make_world_catalog(std::size_t hours, std::uint64_t seed);

// Writes a ready-to-run corpus:
//   traces/<id>.csv        current period
//   previous/<id>.csv      preceding period, with per-region drift for trend runs
//   regions.json           continent / geo_group metadata
//   latency.csv            directed round-trip times
//   load.json capacity.json
//   configs/*.json         one manifest per command
void write_world_corpus(const std::filesystem::path& dir, std::size_t hours, std::uint64_t seed);

}  // namespace carbonshift
