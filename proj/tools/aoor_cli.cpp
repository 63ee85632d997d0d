// Runs one learning experiment from a JSON config and writes the report.
//
//   aoor --config benchmarks/b2.json --algorithm both --out out/b2

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "aoor/error.hpp"
#include "aoor/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Data-driven optimal output regulation experiments"};
  std::string config_path;
  std::string algorithm;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "./out";
  bool emit_trajectory = false;
  bool timings = false;

  app.add_option("--config", config_path, "Experiment configuration (JSON)")->required();
  app.add_option("--algorithm", algorithm, "original | refined | both (default both)")
      ->check(CLI::IsMember({"original", "refined", "both"}));
  app.add_option("--seed", seed, "Seed for excitation phases (default: config seed, 0)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--emit-trajectory", emit_trajectory, "Also write trajectory.csv");
  app.add_flag("--timings", timings,
               "Record wall-clock timings (makes outputs non-reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  aoor::ExperimentConfig config;
  try {
    config = aoor::load_config(config_path);
    if (!algorithm.empty()) {
      config.algorithm = aoor::parse_algorithm(algorithm);
      config.validate();
    }
  } catch (const aoor::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }

  try {
    const std::uint64_t run_seed = seed.value_or(config.excitation.seed);
    const aoor::ExperimentReport report =
        aoor::run_experiment(config, run_seed, {timings});
    aoor::write_outputs(report, out_dir, emit_trajectory, timings);

    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
    for (const aoor::Check& c : report.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.detail << "\n";
    }
    if (report.agreement) std::cout << "\n" << aoor::compare_report(report).to_text();
    return report.all_pass() ? 0 : 1;
  } catch (const aoor::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == aoor::ErrorKind::kConfig ? 2 : 1;
  }
}
