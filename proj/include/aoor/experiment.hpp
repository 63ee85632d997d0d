#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aoor/excitation.hpp"
#include "aoor/learner.hpp"
#include "aoor/plant_oracle.hpp"

namespace aoor {

enum class Algorithm { kOriginal, kRefined, kBoth };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

/// Closed-loop evaluation run under u = -K x + L v after learning.
struct EvaluationSpec {
  double horizon = 30.0;
  double settle_time = 15.0;  // |e| is checked for t >= settle_time
  double dt = 0.005;
  std::optional<Eigen::VectorXd> x0;  // defaults to init.x0
};

/// Pass/fail thresholds for the report checks.
struct CheckTolerances {
  double gain_rel = 1e-2;        // |K - K*| / |K*|
  double regulator_rel = 1e-2;   // |X - X*| <= tol (1 + |X*|), same for U
  double tracking_rel = 1e-2;    // |e(t)| <= tol (1 + |x(0)|)
  double agreement_rel = 1e-3;   // original vs refined iterates and gains
};

struct ExperimentConfig {
  std::string name;
  Plant plant;
  Exosystem exo;
  CostWeights weights;
  Eigen::VectorXd x0, v0;
  ExcitationSpec excitation;
  bool phases_given = false;  // otherwise drawn from the seed
  SampleSchedule schedule;
  LearnerConfig learner;
  Algorithm algorithm = Algorithm::kBoth;
  EvaluationSpec evaluation;
  CheckTolerances tolerances;

  Eigen::Index h() const { return (plant.n() - plant.p()) * plant.q(); }

  /// Throws Error(kConfig) naming the offending field.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

/// Phases used for the run: the configured ones, or uniform draws in
/// [0, 2 pi) from the seed.
std::vector<double> resolve_phases(const ExperimentConfig& config,
                                   std::uint64_t seed);

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct IterateRow {
  int j = 0;
  std::optional<double> dP;  // |P_j - P_{j-1}|_F, absent for j = 0
  double dK_vs_oracle = 0.0; // |K_j - K*|_F
  double wallclock_ms = 0.0;
  Eigen::Index solve_cols = 0;
};

struct TrackingResult {
  std::vector<double> times;
  Eigen::MatrixXd e;            // p x N
  double max_error_after_settle = 0.0;
  double bound = 0.0;
};

struct AlgorithmReport {
  Algorithm algorithm = Algorithm::kRefined;
  bool ran = false;
  std::optional<std::string> failure;  // "<kind>: message"
  LearnResult learn;
  std::vector<IterateRow> rows;
  double D_error = 0.0;                  // |D_hat - D|_F
  std::vector<double> S_errors;          // |S_hat_i - S(X_i)|_F
  RegulatorAssembly regulator;
  double regulator_rel_residual = 0.0;
  double X_error = 0.0, U_error = 0.0;   // vs oracle, Frobenius
  Controller controller;
  double K_rel_error = 0.0;
  double L_rel_error = 0.0;
  double monotone_gap = 0.0;
  TrackingResult tracking;
  double total_ms = 0.0;
};

struct Agreement {
  std::vector<double> per_iterate_rel;  // |P_j^orig - P_j^ref| / |P_j^orig|
  double K_rel = 0.0;
  double L_rel = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::uint64_t seed = 0;
  Eigen::Index n = 0, m = 0, p = 0, q = 0, h = 0;
  AssumptionReport assumptions;
  std::vector<std::string> warnings;
  RankDiagnostics rank_original;
  RankDiagnostics rank_refined;
  KleinmanResult oracle;
  RegulatorSolution oracle_regulator;
  Controller oracle_controller;
  SolveDims dims;
  std::vector<AlgorithmReport> algorithms;
  std::optional<Agreement> agreement;
  std::vector<Check> checks;
  TrajectoryLog trajectory;

  bool all_pass() const;
  const AlgorithmReport* find(Algorithm a) const;
};

struct RunOptions {
  bool record_timings = false;
};

/// oracle -> simulate -> learn -> assemble regulator -> evaluate.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                std::uint64_t seed,
                                const RunOptions& options = {});

struct ComparisonRow {
  Algorithm algorithm = Algorithm::kOriginal;
  Eigen::Index unknowns_per_iteration = 0;
  Eigen::Index per_basis_unknowns = 0;
  Eigen::Index full_size_conditions = 0;
  Eigen::Index reduced_conditions = 0;
  int iterations = 0;
  double ms_per_iteration = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  Agreement agreement;

  std::string to_text() const;
};

/// Requires both algorithms to have run.
ComparisonTable compare_report(const ExperimentReport& report);

/// report.json, iterations.csv, tracking.csv and optionally trajectory.csv.
void write_outputs(const ExperimentReport& report,
                   const std::filesystem::path& out_dir,
                   bool emit_trajectory, bool with_timings);

std::string report_json(const ExperimentReport& report, bool with_timings);
std::string iterations_csv(const ExperimentReport& report, bool with_timings);
std::string tracking_csv(const TrackingResult& tracking);

/// Random n = 4, m = 2, p = 2, q = 2 problem with a stable A, redrawn until
/// the solvability assumptions hold.
ExperimentConfig make_random_benchmark(std::uint64_t seed);

}  // namespace aoor
