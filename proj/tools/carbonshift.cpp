#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "carbonshift/experiments.hpp"

namespace {

struct Overrides {
  std::string out_dir;
  std::optional<int> parallelism;
  std::optional<std::uint64_t> seed;
  std::optional<double> global_avg;
};

void add_common(CLI::App* cmd, std::string& config_path, Overrides& o) {
  cmd->add_option("--config", config_path, "experiment manifest (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "output directory (overrides the manifest)");
  cmd->add_option("--parallelism", o.parallelism, "worker threads (overrides the manifest)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "RNG seed (overrides the manifest)");
  cmd->add_option("--global-avg", o.global_avg,
                  "global average intensity, g CO2eq/kWh (overrides the manifest)")
      ->check(CLI::PositiveNumber);
}

int run(const std::string& config_path, const Overrides& o,
        carbonshift::RunReport (*command)(const carbonshift::ExperimentConfig&)) {
  carbonshift::ExperimentConfig config = carbonshift::load_config(config_path);
  if (!o.out_dir.empty()) config.out_dir = o.out_dir;
  if (o.parallelism) config.parallelism = *o.parallelism;
  if (o.seed) config.seed = *o.seed;
  if (o.global_avg) config.global_avg = *o.global_avg;

  const carbonshift::RunReport report = command(config);
  for (const auto& w : report.warnings)
    std::cerr << "warning: " << w.context << ": " << w.message << "\n";
  for (const auto& path : report.outputs) std::cout << path.string() << "\n";
  return report.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carbon-aware workload shifting: trace analysis and shifting experiments"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    carbonshift::RunReport (*command)(const carbonshift::ExperimentConfig&);
  };
  const Sub subs[] = {
      {"analyze", "per-region statistics, quadrants, periodicity, trends", carbonshift::cmd_analyze},
      {"temporal", "savings from deferring or interrupting jobs within slack", carbonshift::cmd_temporal},
      {"spatial", "savings from moving load between regions", carbonshift::cmd_spatial},
      {"latency", "spatial savings under a round-trip latency budget", carbonshift::cmd_latency},
      {"fetch", "download traces over HTTP into canonical CSV", carbonshift::cmd_fetch},
  };

  std::string config_path;
  Overrides overrides;
  for (const auto& sub : subs) add_common(app.add_subcommand(sub.name, sub.help), config_path, overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& sub : subs)
      if (app.get_subcommand(sub.name)->parsed()) return run(config_path, overrides, sub.command);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
