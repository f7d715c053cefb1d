#include "carbonshift/workload.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "carbonshift/io.hpp"

namespace carbonshift {

const std::vector<double>& standard_job_lengths() {
  static const std::vector<double> lengths = {0.01, 1.0, 6.0, 12.0, 24.0, 48.0, 96.0, 168.0};
  return lengths;
}

const char* to_string(Slack::Kind kind) {
  return kind == Slack::Kind::fixed ? "fixed" : "multiplier";
}

void validate_job(const Job& job) {
  if (!(job.length_hours > 0.0) || !std::isfinite(job.length_hours))
    throw std::invalid_argument("job length must be positive, got " + format_double(job.length_hours));
  if (job.slack.value < 0.0 || !std::isfinite(job.slack.value))
    throw std::invalid_argument("job slack must be non-negative, got " + format_double(job.slack.value));
  if (job.length_hours <= interactive_threshold_hours && job.slack_hours() != 0.0)
    throw std::invalid_argument("interactive job of " + format_double(job.length_hours) +
                                " h cannot carry slack");
}

JobSlots job_slots(double length_hours) {
  if (!(length_hours > 0.0) || !std::isfinite(length_hours))
    throw std::invalid_argument("job length must be positive, got " + format_double(length_hours));
  JobSlots s;
  const double whole = std::floor(length_hours);
  s.full_slots = static_cast<std::size_t>(whole);
  s.frac = length_hours - whole;
  if (s.frac > 1.0 - 1e-12) {  // absorb float noise just below a whole hour
    ++s.full_slots;
    s.frac = 0.0;
  }
  return s;
}

void validate_mix(const WorkloadMix& mix) {
  if (mix.weights.empty()) throw std::invalid_argument("workload mix is empty");
  double sum = 0.0;
  for (const auto& [length, weight] : mix.weights) {
    if (!(length > 0.0)) throw std::invalid_argument("mix length must be positive, got " + format_double(length));
    if (weight < 0.0 || !std::isfinite(weight))
      throw std::invalid_argument("mix weight must be non-negative, got " + format_double(weight));
    sum += weight;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("mix weights sum to " + format_double(sum) + ", expected 1");
}

MixPreset parse_mix_preset(std::string_view name) {
  if (name == "equal") return MixPreset::equal;
  if (name == "split_80_20") return MixPreset::split_80_20;
  if (name == "google") return MixPreset::google;
  if (name == "azure") return MixPreset::azure;
  throw std::invalid_argument("unknown mix preset '" + std::string(name) + "'");
}

const char* to_string(MixPreset preset) {
  switch (preset) {
    case MixPreset::equal: return "equal";
    case MixPreset::split_80_20: return "split_80_20";
    case MixPreset::google: return "google";
    case MixPreset::azure: return "azure";
  }
  return "equal";
}

WorkloadMix mix_preset(MixPreset preset) {
  const auto& lengths = standard_job_lengths();
  WorkloadMix mix;
  switch (preset) {
    case MixPreset::equal:
      for (double len : lengths) mix.weights[len] = 1.0 / static_cast<double>(lengths.size());
      break;
    case MixPreset::split_80_20: {
      // 80% of resource usage in day-or-shorter jobs, 20% in longer ones.
      std::vector<double> short_lengths, long_lengths;
      for (double len : lengths) (len <= 24.0 ? short_lengths : long_lengths).push_back(len);
      for (double len : short_lengths) mix.weights[len] = 0.8 / static_cast<double>(short_lengths.size());
      for (double len : long_lengths) mix.weights[len] = 0.2 / static_cast<double>(long_lengths.size());
      break;
    }
    case MixPreset::google:
      // Week-plus jobs dominate resource usage.
      for (double len : lengths) mix.weights[len] = len == 168.0 ? 0.9 : 0.1 / 7.0;
      break;
    case MixPreset::azure:
      mix.weights = {{0.01, 0.01}, {1.0, 0.02}, {6.0, 0.04}, {12.0, 0.05},
                     {24.0, 0.08}, {48.0, 0.10}, {96.0, 0.15}, {168.0, 0.55}};
      break;
  }
  validate_mix(mix);
  return mix;
}

namespace {

double parse_double_key(const std::string& key, const char* what) {
  double v = 0.0;
  const char* end = key.data() + key.size();
  auto [p, ec] = std::from_chars(key.data(), end, v);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument(std::string(what) + ": bad numeric key '" + key + "'");
  return v;
}

nlohmann::json parse_json_object(const std::filesystem::path& path, const char* what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (!j.is_object())
    throw std::invalid_argument(path.string() + ": " + what + " must be a JSON object");
  return j;
}

}  // namespace

WorkloadMix load_mix_file(const std::filesystem::path& path) {
  const auto j = parse_json_object(path, "workload mix");
  WorkloadMix mix;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number())
      throw std::invalid_argument(path.string() + ": weight for '" + key + "' is not a number");
    mix.weights[parse_double_key(key, "workload mix")] = value.get<double>();
  }
  validate_mix(mix);
  return mix;
}

double expected_savings(const std::map<double, double>& per_length, const WorkloadMix& mix) {
  validate_mix(mix);
  double sum = 0.0;
  for (const auto& [length, weight] : mix.weights) {
    if (weight == 0.0) continue;
    auto it = per_length.find(length);
    if (it == per_length.end())
      throw std::invalid_argument("expected_savings: no value for job length " + format_double(length));
    sum += weight * it->second;
  }
  return sum;
}

void validate_origin_weights(const OriginWeights& weights) {
  if (weights.weights.empty()) throw std::invalid_argument("origin weights are empty");
  double sum = 0.0;
  for (const auto& [region, weight] : weights.weights) {
    if (region.empty()) throw std::invalid_argument("origin weights: empty region id");
    if (weight < 0.0 || !std::isfinite(weight))
      throw std::invalid_argument("origin weight for '" + region + "' must be non-negative");
    sum += weight;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("origin weights sum to " + format_double(sum) + ", expected 1");
}

OriginWeights load_origin_weights_file(const std::filesystem::path& path) {
  const auto j = parse_json_object(path, "origin weights");
  OriginWeights w;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number())
      throw std::invalid_argument(path.string() + ": weight for '" + key + "' is not a number");
    w.weights[key] = value.get<double>();
  }
  validate_origin_weights(w);
  return w;
}

}  // namespace carbonshift
