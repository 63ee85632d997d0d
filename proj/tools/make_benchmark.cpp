// Writes the randomly generated 4-state benchmark config.
//
//   make_benchmark --seed 3 > benchmarks/b3.json

#include <cstdint>
#include <iostream>

#include "CLI11.hpp"

#include "aoor/error.hpp"
#include "aoor/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the random n=4, m=2, p=2, q=2 benchmark"};
  std::uint64_t seed = 3;
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    std::cout << aoor::dump_config(aoor::make_random_benchmark(seed));
  } catch (const aoor::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
