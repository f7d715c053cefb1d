#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace carbonshift {

// Job length classes, hours. 0.01 h stands in for interactive work.
const std::vector<double>& standard_job_lengths();

// Jobs at or below one minute are interactive and never wait.
inline constexpr double interactive_threshold_hours = 1.0 / 60.0;

struct Slack {
  enum class Kind { fixed, multiplier };
  Kind kind = Kind::fixed;
  double value = 0.0;

  static Slack fixed(double hours) { return {Kind::fixed, hours}; }
  static Slack multiplier(double m) { return {Kind::multiplier, m}; }

  double hours(double length_hours) const {
    return kind == Kind::fixed ? value : value * length_hours;
  }
};
const char* to_string(Slack::Kind kind);

struct Job {
  double length_hours = 1.0;
  Slack slack;
  bool interruptible = false;
  std::size_t arrival_slot = 0;
  std::string origin;  // submitting region, informational for mapped workloads

  double slack_hours() const { return slack.hours(length_hours); }
};

// Throws std::invalid_argument on non-positive length, negative slack, or an
// interactive job that claims slack.
void validate_job(const Job& job);

// A job occupies full_slots whole hours plus a final slot at weight frac.
struct JobSlots {
  std::size_t full_slots = 0;
  double frac = 0.0;  // in [0, 1)
};
JobSlots job_slots(double length_hours);

// Resource-usage share per job length class; weights sum to 1.
struct WorkloadMix {
  std::map<double, double> weights;
};
void validate_mix(const WorkloadMix& mix);

enum class MixPreset { equal, split_80_20, google, azure };
MixPreset parse_mix_preset(std::string_view name);
const char* to_string(MixPreset preset);
WorkloadMix mix_preset(MixPreset preset);

// JSON object mapping length (hours, as string key) to weight.
WorkloadMix load_mix_file(const std::filesystem::path& path);

// Mix-weighted average of a per-length metric. Every length with positive
// weight must be present.
double expected_savings(const std::map<double, double>& per_length, const WorkloadMix& mix);

// Fraction of total load originating in each region; sums to 1.
struct OriginWeights {
  std::map<std::string, double> weights;
};
void validate_origin_weights(const OriginWeights& weights);

// JSON object mapping region id to load fraction.
OriginWeights load_origin_weights_file(const std::filesystem::path& path);

}  // namespace carbonshift
