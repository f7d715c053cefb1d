#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "carbonshift/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic 20-region demo corpus"};

  std::string out_dir;
  std::size_t hours = 2880;
  std::uint64_t seed = 42;
  app.add_option("--out", out_dir, "corpus directory")->required();
  app.add_option("--hours", hours, "trace length in hours")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    carbonshift::write_world_corpus(out_dir, hours, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << out_dir << "\n";
  return 0;
}
