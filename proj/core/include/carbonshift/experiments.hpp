#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "carbonshift/fetch.hpp"
#include "carbonshift/metrics.hpp"
#include "carbonshift/trace.hpp"

namespace carbonshift {

struct SlackGrid {
  std::vector<double> fixed_hours;
  std::vector<double> multipliers;
};

// One experiment manifest. Loaded from a JSON file; paths are resolved
// against the file's directory. Unknown keys are rejected so a typo cannot
// silently fall back to a default.
struct ExperimentConfig {
  std::string experiment;  // optional label; must match the command when set

  std::filesystem::path trace_dir;
  std::filesystem::path trace_dir_previous;
  std::filesystem::path region_metadata;
  std::vector<std::string> regions;     // empty = all
  std::vector<std::string> geo_groups;  // empty = all
  std::optional<SlotRange> interval;    // default: full trace
  int max_gap_hours = 3;

  // analyze
  std::string cv_mode = "full";  // "full" or "daily_mean"
  std::vector<int> candidate_periods = {24, 168};
  TrendThresholds trend_thresholds;

  // temporal
  std::vector<double> job_lengths;  // default: the standard length classes
  SlackGrid slack;                  // default: fixed 24 h
  std::string mix = "equal";
  std::filesystem::path mix_file;  // overrides the preset

  // spatial / latency
  std::filesystem::path load_weights;  // default: equal share per region
  std::filesystem::path capacity;
  double headroom = 1.0;
  std::filesystem::path latency_matrix;
  std::vector<double> slo_grid_ms = {0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0};

  double global_avg = default_global_average_ci;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int parallelism = 1;

  FetchConfig fetch;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct RunReport {
  std::vector<std::filesystem::path> outputs;
  std::vector<Warning> warnings;
  bool ok = true;
};

// Each command loads inputs per the config, computes its tables, and writes
// CSV plus a JSON mirror and a warnings.json into out_dir. Identical
// (config, seed, inputs) produce identical bytes at any parallelism.
RunReport cmd_analyze(const ExperimentConfig& config);
RunReport cmd_temporal(const ExperimentConfig& config);
RunReport cmd_spatial(const ExperimentConfig& config);
RunReport cmd_latency(const ExperimentConfig& config);
RunReport cmd_fetch(const ExperimentConfig& config);

}  // namespace carbonshift
