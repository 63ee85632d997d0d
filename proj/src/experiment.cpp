#include "aoor/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "aoor/basis.hpp"
#include "aoor/error.hpp"
#include "aoor/tensor_ops.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kConfig, field + ": " + what);
}

const json& require(const json& j, const std::string& parent,
                    const std::string& key) {
  const std::string field = parent.empty() ? key : parent + "." + key;
  if (!j.is_object()) config_error(parent, "must be an object");
  auto it = j.find(key);
  if (it == j.end()) config_error(field, "missing");
  return *it;
}

double read_number(const json& j, const std::string& field) {
  if (!j.is_number()) config_error(field, "must be a number");
  return j.get<double>();
}

MatrixXd read_matrix(const json& j, const std::string& field) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) config_error(field, "must be a non-empty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  MatrixXd M;
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) config_error(field, "rows must be arrays");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      if (cols == 0) config_error(field, "rows must be non-empty");
      M.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      config_error(field, "rows have different lengths");
    }
    for (Index c = 0; c < cols; ++c) {
      M(r, c) = read_number(row[static_cast<std::size_t>(c)],
                            field + "[" + std::to_string(r) + "]");
    }
  }
  return M;
}

VectorXd read_vector(const json& j, const std::string& field) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) config_error(field, "must be a non-empty array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = read_number(j[k], field);
  return v;
}

std::vector<double> read_list(const json& j, const std::string& field) {
  if (!j.is_array()) config_error(field, "must be an array");
  std::vector<double> out;
  for (const json& e : j) out.push_back(read_number(e, field));
  return out;
}

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

double rel(const MatrixXd& reference, const MatrixXd& other) {
  const double diff = (reference - other).norm();
  const double scale = reference.norm();
  return scale > 1e-12 ? diff / scale : diff;
}

std::string fmt(double value) { return format_double(value); }

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kOriginal: return "original";
    case Algorithm::kRefined: return "refined";
    case Algorithm::kBoth: return "both";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "original") return Algorithm::kOriginal;
  if (text == "refined") return Algorithm::kRefined;
  if (text == "both") return Algorithm::kBoth;
  config_error("algorithm", "must be one of original, refined, both");
}

void ExperimentConfig::validate() const {
  try {
    validate_problem(plant, exo, weights);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  const Index n = plant.n(), m = plant.m(), q = plant.q();
  if (q < 1) config_error("plant.D", "needs at least one exosystem state");
  if (x0.size() != n) config_error("init.x0", "must have length n = " + std::to_string(n));
  if (v0.size() != q) config_error("init.v0", "must have length q = " + std::to_string(q));
  try {
    excitation.validate(n, m, q);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  if (excitation.K0.rows() != m || excitation.K0.cols() != n) {
    config_error("init.K0", "must be m x n");
  }
  try {
    schedule.steps_per_sample();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
  const Index needed = required_sample_count(n, m, q);
  if (schedule.sample_count < needed) {
    config_error("schedule.samples", "must be at least n(n+1)/2 + (m+q)n = " +
                                         std::to_string(needed));
  }
  if (!(learner.eps > 0.0)) config_error("learner.eps", "must be positive");
  if (learner.max_iter < 2) config_error("learner.max_iter", "must be at least 2");
  if (!(learner.rank_tol > 0.0)) config_error("learner.rank_tol", "must be positive");
  if (algorithm != Algorithm::kOriginal && v0.norm() == 0.0) {
    config_error("init.v0", "must be nonzero for the refined algorithm");
  }
  if (!(evaluation.dt > 0.0) || !(evaluation.horizon > evaluation.settle_time) ||
      evaluation.settle_time < 0.0) {
    config_error("evaluation", "need dt > 0 and 0 <= settle_time < horizon");
  }
  if (evaluation.x0 && evaluation.x0->size() != n) {
    config_error("evaluation.x0", "must have length n");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("parse error: ") + e.what());
  }
  if (!root.is_object()) config_error("<root>", "must be an object");

  ExperimentConfig cfg;
  cfg.name = root.value("name", std::string("experiment"));

  const json& plant = require(root, "", "plant");
  cfg.plant.A = read_matrix(require(plant, "plant", "A"), "plant.A");
  cfg.plant.B = read_matrix(require(plant, "plant", "B"), "plant.B");
  cfg.plant.C = read_matrix(require(plant, "plant", "C"), "plant.C");
  cfg.plant.D = read_matrix(require(plant, "plant", "D"), "plant.D");
  cfg.exo.E = read_matrix(require(plant, "plant", "E"), "plant.E");
  cfg.plant.F = read_matrix(require(plant, "plant", "F"), "plant.F");

  const json& weights = require(root, "", "weights");
  cfg.weights.Q = read_matrix(require(weights, "weights", "Q"), "weights.Q");
  cfg.weights.R = read_matrix(require(weights, "weights", "R"), "weights.R");

  const json& init = require(root, "", "init");
  cfg.x0 = read_vector(require(init, "init", "x0"), "init.x0");
  cfg.v0 = read_vector(require(init, "init", "v0"), "init.v0");
  cfg.excitation.K0 = read_matrix(require(init, "init", "K0"), "init.K0");

  const json& exc = require(root, "", "excitation");
  cfg.excitation.frequencies =
      read_list(require(exc, "excitation", "frequencies"), "excitation.frequencies");
  const json& amps = require(exc, "excitation", "amplitudes");
  if (!amps.is_array()) config_error("excitation.amplitudes", "must be an array");
  for (const json& a : amps) {
    cfg.excitation.amplitudes.push_back(read_vector(a, "excitation.amplitudes"));
  }
  if (exc.contains("phases")) {
    cfg.excitation.phases = read_list(exc["phases"], "excitation.phases");
    cfg.phases_given = true;
  }
  if (exc.contains("seed")) {
    if (!exc["seed"].is_number_unsigned()) {
      config_error("excitation.seed", "must be a nonnegative integer");
    }
    cfg.excitation.seed = exc["seed"].get<std::uint64_t>();
  }

  const json& sched = require(root, "", "schedule");
  if (sched.contains("t0")) cfg.schedule.t0 = read_number(sched["t0"], "schedule.t0");
  const json& samples = require(sched, "schedule", "samples");
  if (!samples.is_number_integer()) config_error("schedule.samples", "must be an integer");
  cfg.schedule.sample_count = samples.get<Index>();
  cfg.schedule.sample_dt =
      read_number(require(sched, "schedule", "sample_dt"), "schedule.sample_dt");
  if (sched.contains("integration_dt")) {
    cfg.schedule.integration_dt =
        read_number(sched["integration_dt"], "schedule.integration_dt");
  } else {
    cfg.schedule.integration_dt = cfg.schedule.sample_dt / 20.0;
  }
  if (sched.contains("quadrature")) {
    const json& rule = sched["quadrature"];
    if (rule == "trapezoid") {
      cfg.schedule.quadrature = Quadrature::kTrapezoid;
    } else if (rule == "simpson") {
      cfg.schedule.quadrature = Quadrature::kSimpson;
    } else {
      config_error("schedule.quadrature", "must be trapezoid or simpson");
    }
  }

  if (root.contains("learner")) {
    const json& l = root["learner"];
    if (l.contains("eps")) cfg.learner.eps = read_number(l["eps"], "learner.eps");
    if (l.contains("max_iter")) {
      if (!l["max_iter"].is_number_integer()) config_error("learner.max_iter", "must be an integer");
      cfg.learner.max_iter = l["max_iter"].get<int>();
    }
    if (l.contains("rank_tol")) cfg.learner.rank_tol = read_number(l["rank_tol"], "learner.rank_tol");
    if (l.contains("tol_mono")) cfg.learner.tol_mono_rel = read_number(l["tol_mono"], "learner.tol_mono");
  }
  if (root.contains("algorithm")) {
    if (!root["algorithm"].is_string()) config_error("algorithm", "must be a string");
    cfg.algorithm = parse_algorithm(root["algorithm"].get<std::string>());
  }
  if (root.contains("evaluation")) {
    const json& ev = root["evaluation"];
    if (ev.contains("horizon")) cfg.evaluation.horizon = read_number(ev["horizon"], "evaluation.horizon");
    if (ev.contains("settle_time")) cfg.evaluation.settle_time = read_number(ev["settle_time"], "evaluation.settle_time");
    if (ev.contains("dt")) cfg.evaluation.dt = read_number(ev["dt"], "evaluation.dt");
    if (ev.contains("x0")) cfg.evaluation.x0 = read_vector(ev["x0"], "evaluation.x0");
  }
  if (root.contains("checks")) {
    const json& c = root["checks"];
    if (c.contains("gain_rel")) cfg.tolerances.gain_rel = read_number(c["gain_rel"], "checks.gain_rel");
    if (c.contains("regulator_rel")) cfg.tolerances.regulator_rel = read_number(c["regulator_rel"], "checks.regulator_rel");
    if (c.contains("tracking_rel")) cfg.tolerances.tracking_rel = read_number(c["tracking_rel"], "checks.tracking_rel");
    if (c.contains("agreement_rel")) cfg.tolerances.agreement_rel = read_number(c["agreement_rel"], "checks.agreement_rel");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json root;
  root["name"] = cfg.name;
  root["plant"] = {{"A", matrix_json(cfg.plant.A)}, {"B", matrix_json(cfg.plant.B)},
                   {"C", matrix_json(cfg.plant.C)}, {"D", matrix_json(cfg.plant.D)},
                   {"E", matrix_json(cfg.exo.E)},   {"F", matrix_json(cfg.plant.F)}};
  root["weights"] = {{"Q", matrix_json(cfg.weights.Q)}, {"R", matrix_json(cfg.weights.R)}};
  root["init"] = {{"x0", vector_json(cfg.x0)}, {"v0", vector_json(cfg.v0)},
                  {"K0", matrix_json(cfg.excitation.K0)}};
  json amps = json::array();
  for (const VectorXd& a : cfg.excitation.amplitudes) amps.push_back(vector_json(a));
  root["excitation"] = {{"amplitudes", amps},
                        {"frequencies", cfg.excitation.frequencies},
                        {"seed", cfg.excitation.seed}};
  if (cfg.phases_given) root["excitation"]["phases"] = cfg.excitation.phases;
  root["schedule"] = {{"t0", cfg.schedule.t0},
                      {"samples", cfg.schedule.sample_count},
                      {"sample_dt", cfg.schedule.sample_dt},
                      {"integration_dt", cfg.schedule.integration_dt},
                      {"quadrature", cfg.schedule.quadrature == Quadrature::kSimpson
                                         ? "simpson" : "trapezoid"}};
  root["learner"] = {{"eps", cfg.learner.eps}, {"max_iter", cfg.learner.max_iter},
                     {"rank_tol", cfg.learner.rank_tol}, {"tol_mono", cfg.learner.tol_mono_rel}};
  root["algorithm"] = std::string(to_string(cfg.algorithm));
  root["evaluation"] = {{"horizon", cfg.evaluation.horizon},
                        {"settle_time", cfg.evaluation.settle_time},
                        {"dt", cfg.evaluation.dt}};
  if (cfg.evaluation.x0) root["evaluation"]["x0"] = vector_json(*cfg.evaluation.x0);
  return root.dump(2) + "\n";
}

std::vector<double> resolve_phases(const ExperimentConfig& config,
                                   std::uint64_t seed) {
  if (config.phases_given) return config.excitation.phases;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases;
  for (std::size_t l = 0; l < config.excitation.frequencies.size(); ++l) {
    phases.push_back(dist(rng));
  }
  return phases;
}

bool ExperimentReport::all_pass() const {
  for (const Check& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

const AlgorithmReport* ExperimentReport::find(Algorithm a) const {
  for (const AlgorithmReport& r : algorithms) {
    if (r.algorithm == a) return &r;
  }
  return nullptr;
}

namespace {

TrackingResult evaluate_tracking(const ExperimentConfig& cfg,
                                 const Controller& controller) {
  const VectorXd x0 = cfg.evaluation.x0.value_or(cfg.x0);
  const Index steps =
      static_cast<Index>(std::llround(cfg.evaluation.horizon / cfg.evaluation.dt));
  InputPolicy policy{controller.K, controller.L, nullptr};
  const TrajectoryLog log = simulate_policy(cfg.plant, cfg.exo, policy, 0.0, steps,
                                            cfg.evaluation.dt, x0, cfg.v0);
  TrackingResult out;
  out.times = log.times;
  out.e = cfg.plant.C * log.x + cfg.plant.F * log.v;
  out.bound = cfg.tolerances.tracking_rel * (1.0 + x0.norm());
  for (Index k = 0; k < log.points(); ++k) {
    if (log.times[static_cast<std::size_t>(k)] >= cfg.evaluation.settle_time - 1e-12) {
      out.max_error_after_settle =
          std::max(out.max_error_after_settle, out.e.col(k).norm());
    }
  }
  return out;
}

void fill_learned_metrics(AlgorithmReport& r, const ExperimentConfig& cfg,
                          const ExperimentReport& rep, const BasisSet& basis,
                          const LearnerConfig& lc) {
  const MatrixXd& K_star = rep.oracle.solution.K_star;
  for (const PolicyIterate& it : r.learn.history) {
    IterateRow row;
    row.j = it.j;
    if (it.j > 0) {
      row.dP = (it.P - r.learn.history[static_cast<std::size_t>(it.j - 1)].P).norm();
    }
    row.dK_vs_oracle = (it.K - K_star).norm();
    for (const SolveRecord& s : r.learn.solves) {
      if (s.j == it.j && s.i == 0 && s.kind != SolveRecord::Kind::kExo) {
        row.wallclock_ms = s.wallclock_ms;
        row.solve_cols = s.cols;
      }
    }
    r.rows.push_back(row);
  }

  const LearnedModelData& model = r.learn.model;
  r.D_error = (model.D_hat - cfg.plant.D).norm();
  for (std::size_t i = 0; i < model.S_hat.size(); ++i) {
    const MatrixXd S = sylvester_map(cfg.plant.A, cfg.exo.E, basis.X[i + 1]);
    r.S_errors.push_back((model.S_hat[i] - S).norm());
  }

  r.regulator = assemble_regulator_system(basis, model.S_hat, model.D_hat,
                                          r.learn.P_final(), r.learn.K_next,
                                          cfg.weights.R, lc.rank_tol);
  r.regulator_rel_residual = r.regulator.residual / (1.0 + r.regulator.b_vec.norm());
  r.X_error = (r.regulator.solution.X - rep.oracle_regulator.X).norm();
  r.U_error = (r.regulator.solution.U - rep.oracle_regulator.U).norm();
  r.controller = learned_controller(r.learn.K_next, r.regulator.solution);
  r.K_rel_error = rel(K_star, r.controller.K);
  r.L_rel_error = rel(rep.oracle_controller.L, r.controller.L);
  r.monotone_gap = min_monotone_gap(r.learn.history);
  r.tracking = evaluate_tracking(cfg, r.controller);
}

void add_check(ExperimentReport& rep, std::string name, bool pass,
               std::string detail) {
  rep.checks.push_back({std::move(name), pass, std::move(detail)});
}

void add_algorithm_checks(ExperimentReport& rep, const AlgorithmReport& r,
                          const ExperimentConfig& cfg) {
  const std::string a(to_string(r.algorithm));
  add_check(rep, a + ".learned", r.ran && !r.failure,
            r.failure.value_or("converged at j* = " + std::to_string(r.learn.j_star)));
  if (!r.ran || r.failure) return;
  const CheckTolerances& tol = cfg.tolerances;
  add_check(rep, a + ".gain_accuracy", r.K_rel_error <= tol.gain_rel,
            "|K - K*|/|K*| = " + fmt(r.K_rel_error));
  const double x_scale = 1.0 + rep.oracle_regulator.X.norm();
  const double u_scale = 1.0 + rep.oracle_regulator.U.norm();
  add_check(rep, a + ".regulator_accuracy",
            r.X_error <= tol.regulator_rel * x_scale &&
                r.U_error <= tol.regulator_rel * u_scale,
            "|X - X*| = " + fmt(r.X_error) + ", |U - U*| = " + fmt(r.U_error));
  add_check(rep, a + ".regulator_consistency",
            r.regulator_rel_residual <= tol.regulator_rel,
            "relative residual " + fmt(r.regulator_rel_residual));
  const double mono_tol = cfg.learner.tol_mono_rel * r.learn.history.front().P.norm();
  add_check(rep, a + ".monotone", r.monotone_gap >= -mono_tol,
            "min eig(P_j - P_{j+1}) = " + fmt(r.monotone_gap));
  add_check(rep, a + ".tracking",
            r.tracking.max_error_after_settle <= r.tracking.bound,
            "max |e| after settle = " + fmt(r.tracking.max_error_after_settle) +
                " (bound " + fmt(r.tracking.bound) + ")");
}

AlgorithmReport run_one(Algorithm which, const ExperimentConfig& cfg,
                        const ExperimentReport& rep, const DataMatrices& data,
                        const BasisSet& basis) {
  AlgorithmReport r;
  r.algorithm = which;
  const RankDiagnostics& gate =
      which == Algorithm::kOriginal ? rep.rank_original : rep.rank_refined;
  if (!gate.all_pass()) {
    std::string failed;
    for (const RankCheck& c : gate.checks) {
      if (!c.informational && !c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
    }
    r.failure = std::string(to_string(ErrorKind::kRankDeficient)) +
                ": rank conditions failed: " + failed;
    return r;
  }
  KnownMatrices known{cfg.plant.C, cfg.weights};
  const auto start = Clock::now();
  try {
    r.learn = which == Algorithm::kOriginal
                  ? original_learn(data, cfg.excitation.K0, known, cfg.learner)
                  : refined_learn(data, cfg.excitation.K0, known, cfg.learner);
    r.total_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    r.ran = true;
    fill_learned_metrics(r, cfg, rep, basis, cfg.learner);
  } catch (const Error& e) {
    r.failure = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return r;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                std::uint64_t seed, const RunOptions& options) {
  config.validate();
  ExperimentConfig cfg = config;
  cfg.excitation.seed = seed;
  cfg.excitation.phases = resolve_phases(config, seed);

  ExperimentReport rep;
  rep.name = cfg.name;
  rep.seed = seed;
  rep.n = cfg.plant.n();
  rep.m = cfg.plant.m();
  rep.p = cfg.plant.p();
  rep.q = cfg.plant.q();
  rep.h = cfg.h();
  rep.dims = solve_dims(rep.n, rep.m, rep.q);
  rep.warnings = cfg.excitation.validate(rep.n, rep.m, rep.q);

  rep.assumptions = check_assumptions(cfg.plant, cfg.exo, cfg.weights);
  std::string notes;
  for (const std::string& s : rep.assumptions.notes) notes += (notes.empty() ? "" : "; ") + s;
  add_check(rep, "assumptions", rep.assumptions.all_pass(), notes.empty() ? "ok" : notes);

  try {
    rep.oracle = solve_are_kleinman(cfg.plant, cfg.weights, cfg.excitation.K0);
    rep.oracle_regulator = solve_regulator_exact(cfg.plant, cfg.exo);
    rep.oracle_controller =
        synthesize_controller(rep.oracle.solution.K_star, rep.oracle_regulator);
    add_check(rep, "oracle", true,
              "Kleinman converged in " +
                  std::to_string(rep.oracle.solution.iterations_used) + " iterations");
  } catch (const Error& e) {
    add_check(rep, "oracle", false, std::string(to_string(e.kind())) + ": " + e.what());
    return rep;
  }

  const BasisSet basis = build_basis(cfg.plant.C, cfg.plant.F, rep.q, cfg.learner.rank_tol);
  try {
    rep.trajectory = simulate(cfg.plant, cfg.exo, cfg.excitation, cfg.schedule,
                              cfg.x0, cfg.v0);
  } catch (const Error& e) {
    add_check(rep, "simulation", false, std::string(to_string(e.kind())) + ": " + e.what());
    return rep;
  }
  const DataMatrices data = build_data_matrices(rep.trajectory, basis, cfg.schedule);
  rep.rank_original = check_rank_original_all(data, cfg.learner.rank_tol);
  rep.rank_refined = check_rank_refined(data, cfg.learner.rank_tol);

  const bool want_original = cfg.algorithm != Algorithm::kRefined;
  const bool want_refined = cfg.algorithm != Algorithm::kOriginal;
  const auto rank_detail = [](const RankDiagnostics& d) {
    std::string out;
    for (const RankCheck& c : d.checks) {
      if (c.informational) continue;
      out += (out.empty() ? "" : ", ") + c.name + " " + std::to_string(c.achieved) +
             "/" + std::to_string(c.required);
    }
    return out;
  };
  if (want_original) {
    add_check(rep, "rank.original", rep.rank_original.all_pass(),
              rank_detail(rep.rank_original));
  }
  if (want_refined) {
    add_check(rep, "rank.refined", rep.rank_refined.all_pass(),
              rank_detail(rep.rank_refined));
  }

  if (want_original) rep.algorithms.push_back(run_one(Algorithm::kOriginal, cfg, rep, data, basis));
  if (want_refined) rep.algorithms.push_back(run_one(Algorithm::kRefined, cfg, rep, data, basis));
  for (const AlgorithmReport& r : rep.algorithms) add_algorithm_checks(rep, r, cfg);

  const AlgorithmReport* orig = rep.find(Algorithm::kOriginal);
  const AlgorithmReport* ref = rep.find(Algorithm::kRefined);
  if (orig && ref && orig->ran && ref->ran) {
    Agreement ag;
    const std::size_t common =
        std::min(orig->learn.history.size(), ref->learn.history.size());
    double worst = 0.0;
    for (std::size_t j = 0; j < common; ++j) {
      const double d = rel(orig->learn.history[j].P, ref->learn.history[j].P);
      ag.per_iterate_rel.push_back(d);
      worst = std::max(worst, d);
    }
    ag.K_rel = rel(orig->controller.K, ref->controller.K);
    ag.L_rel = rel(orig->controller.L, ref->controller.L);
    add_check(rep, "agreement.iterates", worst <= cfg.tolerances.agreement_rel,
              "max |P_j^orig - P_j^ref|/|P_j| = " + fmt(worst));
    add_check(rep, "agreement.controller",
              ag.K_rel <= cfg.tolerances.agreement_rel &&
                  ag.L_rel <= cfg.tolerances.agreement_rel,
              "K " + fmt(ag.K_rel) + ", L " + fmt(ag.L_rel));
    rep.agreement = std::move(ag);
  }

  if (!options.record_timings) {
    for (AlgorithmReport& r : rep.algorithms) {
      r.total_ms = 0.0;
      for (SolveRecord& s : r.learn.solves) s.wallclock_ms = 0.0;
      for (IterateRow& row : r.rows) row.wallclock_ms = 0.0;
    }
  }
  return rep;
}

ComparisonTable compare_report(const ExperimentReport& report) {
  const AlgorithmReport* orig = report.find(Algorithm::kOriginal);
  const AlgorithmReport* ref = report.find(Algorithm::kRefined);
  if (!orig || !ref || !orig->ran || !ref->ran || !report.agreement) {
    throw Error(ErrorKind::kConfig,
                "compare_report: needs a report in which both algorithms ran");
  }
  ComparisonTable table;
  const auto mean_ms = [](const AlgorithmReport& r, SolveRecord::Kind kind) {
    double total = 0.0;
    int count = 0;
    for (const SolveRecord& s : r.learn.solves) {
      if (s.kind == kind && s.i == 0) {
        total += s.wallclock_ms;
        ++count;
      }
    }
    return count > 0 ? total / count : 0.0;
  };

  ComparisonRow o;
  o.algorithm = Algorithm::kOriginal;
  o.unknowns_per_iteration = report.dims.full;
  o.per_basis_unknowns = report.dims.full;
  o.full_size_conditions = report.rank_original.counted_full_size();
  o.reduced_conditions = report.rank_original.counted() - o.full_size_conditions;
  o.iterations = orig->learn.j_star + 1;
  o.ms_per_iteration = mean_ms(*orig, SolveRecord::Kind::kFull);
  table.rows.push_back(o);

  ComparisonRow r;
  r.algorithm = Algorithm::kRefined;
  r.unknowns_per_iteration = report.dims.reduced;
  r.per_basis_unknowns = report.dims.exo;
  r.full_size_conditions = report.rank_refined.counted_full_size();
  r.reduced_conditions = report.rank_refined.counted() - r.full_size_conditions;
  r.iterations = ref->learn.j_star + 1;
  r.ms_per_iteration = mean_ms(*ref, SolveRecord::Kind::kReduced);
  table.rows.push_back(r);

  table.agreement = *report.agreement;
  return table;
}

std::string ComparisonTable::to_text() const {
  std::ostringstream out;
  out << "algorithm  unknowns/iter  unknowns/basis  full-size-rank  reduced-rank  "
         "iterations  ms/iter\n";
  for (const ComparisonRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-9s  %13lld  %14lld  %14lld  %12lld  %10d  %7.3f\n",
                  std::string(to_string(r.algorithm)).c_str(),
                  static_cast<long long>(r.unknowns_per_iteration),
                  static_cast<long long>(r.per_basis_unknowns),
                  static_cast<long long>(r.full_size_conditions),
                  static_cast<long long>(r.reduced_conditions), r.iterations,
                  r.ms_per_iteration);
    out << line;
  }
  double worst = 0.0;
  for (double d : agreement.per_iterate_rel) worst = std::max(worst, d);
  out << "agreement: max iterate " << fmt(worst) << ", K " << fmt(agreement.K_rel)
      << ", L " << fmt(agreement.L_rel) << "\n";
  return out.str();
}

namespace {

json rank_json(const RankDiagnostics& d) {
  json out = json::array();
  for (const RankCheck& c : d.checks) {
    out.push_back({{"name", c.name},
                   {"shape", {c.rows, c.cols}},
                   {"required", c.required},
                   {"achieved", c.achieved},
                   {"smallest_kept_singular_value", c.smallest_kept_singular_value},
                   {"full_size", c.full_size},
                   {"informational", c.informational},
                   {"pass", c.pass}});
  }
  return out;
}

std::string_view kind_name(SolveRecord::Kind k) {
  switch (k) {
    case SolveRecord::Kind::kFull: return "full";
    case SolveRecord::Kind::kExo: return "exo";
    case SolveRecord::Kind::kReduced: return "reduced";
  }
  return "unknown";
}

}  // namespace

std::string report_json(const ExperimentReport& rep, bool with_timings) {
  json root;
  root["name"] = rep.name;
  root["seed"] = rep.seed;
  root["dims"] = {{"n", rep.n}, {"m", rep.m}, {"p", rep.p}, {"q", rep.q}, {"h", rep.h}};
  root["solve_columns"] = {{"full", rep.dims.full},
                           {"exo", rep.dims.exo},
                           {"reduced", rep.dims.reduced}};
  root["assumptions"] = {{"stabilizable", rep.assumptions.stabilizable},
                         {"observable", rep.assumptions.observable},
                         {"regulator_solvable", rep.assumptions.regulator_solvable},
                         {"notes", rep.assumptions.notes}};
  root["warnings"] = rep.warnings;
  root["rank"] = {{"original", rank_json(rep.rank_original)},
                  {"refined", rank_json(rep.rank_refined)}};
  if (rep.oracle.solution.P_star.size() > 0) {
    root["oracle"] = {{"P_star", matrix_json(rep.oracle.solution.P_star)},
                      {"K_star", matrix_json(rep.oracle.solution.K_star)},
                      {"iterations", rep.oracle.solution.iterations_used},
                      {"X", matrix_json(rep.oracle_regulator.X)},
                      {"U", matrix_json(rep.oracle_regulator.U)},
                      {"L", matrix_json(rep.oracle_controller.L)}};
  }
  json algs = json::array();
  for (const AlgorithmReport& r : rep.algorithms) {
    json a;
    a["algorithm"] = std::string(to_string(r.algorithm));
    a["ran"] = r.ran;
    a["failure"] = r.failure ? json(*r.failure) : json(nullptr);
    if (r.ran && !r.failure) {
      json hist = json::array();
      for (const IterateRow& row : r.rows) {
        json h = {{"j", row.j},
                  {"dP", row.dP ? json(*row.dP) : json(nullptr)},
                  {"dK_vs_oracle", row.dK_vs_oracle},
                  {"solve_cols", row.solve_cols}};
        if (with_timings) h["wallclock_ms"] = row.wallclock_ms;
        hist.push_back(std::move(h));
      }
      a["history"] = hist;
      a["j_star"] = r.learn.j_star;
      a["D_hat"] = matrix_json(r.learn.model.D_hat);
      a["D_error"] = r.D_error;
      a["S_errors"] = r.S_errors;
      a["regulator"] = {{"X", matrix_json(r.regulator.solution.X)},
                        {"U", matrix_json(r.regulator.solution.U)},
                        {"alpha", vector_json(r.regulator.solution.alpha)},
                        {"shape", {r.regulator.A_mat.rows(), r.regulator.A_mat.cols()}},
                        {"rank", r.regulator.rank},
                        {"relative_residual", r.regulator_rel_residual},
                        {"X_error", r.X_error},
                        {"U_error", r.U_error}};
      a["controller"] = {{"K", matrix_json(r.controller.K)},
                         {"L", matrix_json(r.controller.L)},
                         {"K_rel_error", r.K_rel_error},
                         {"L_rel_error", r.L_rel_error}};
      a["monotone_gap"] = r.monotone_gap;
      a["tracking"] = {{"max_error_after_settle", r.tracking.max_error_after_settle},
                       {"bound", r.tracking.bound}};
      json solves = json::array();
      for (const SolveRecord& s : r.learn.solves) {
        json e = {{"kind", std::string(kind_name(s.kind))},
                  {"j", s.j}, {"i", s.i}, {"cols", s.cols}, {"rank", s.rank}};
        if (with_timings) e["wallclock_ms"] = s.wallclock_ms;
        solves.push_back(std::move(e));
      }
      a["solves"] = solves;
      if (with_timings) a["total_ms"] = r.total_ms;
    }
    algs.push_back(std::move(a));
  }
  root["algorithms"] = algs;
  if (rep.agreement) {
    root["agreement"] = {{"per_iterate_rel", rep.agreement->per_iterate_rel},
                         {"K_rel", rep.agreement->K_rel},
                         {"L_rel", rep.agreement->L_rel}};
    const ComparisonTable table = compare_report(rep);
    json rows = json::array();
    for (const ComparisonRow& r : table.rows) {
      json row = {{"algorithm", std::string(to_string(r.algorithm))},
                  {"unknowns_per_iteration", r.unknowns_per_iteration},
                  {"per_basis_unknowns", r.per_basis_unknowns},
                  {"full_size_conditions", r.full_size_conditions},
                  {"reduced_conditions", r.reduced_conditions},
                  {"iterations", r.iterations}};
      if (with_timings) row["ms_per_iteration"] = r.ms_per_iteration;
      rows.push_back(std::move(row));
    }
    root["comparison"] = rows;
  }
  json checks = json::array();
  for (const Check& c : rep.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  root["checks"] = checks;
  root["pass"] = rep.all_pass();
  return root.dump(2) + "\n";
}

std::string iterations_csv(const ExperimentReport& rep, bool with_timings) {
  std::ostringstream out;
  out << "algorithm,j,dP,dK_vs_oracle,wallclock_ms,solve_cols\n";
  for (const AlgorithmReport& r : rep.algorithms) {
    for (const IterateRow& row : r.rows) {
      out << to_string(r.algorithm) << ',' << row.j << ','
          << (row.dP ? fmt(*row.dP) : "") << ',' << fmt(row.dK_vs_oracle) << ','
          << (with_timings ? fmt(row.wallclock_ms) : "") << ',' << row.solve_cols
          << '\n';
    }
  }
  return out.str();
}

std::string tracking_csv(const TrackingResult& tracking) {
  std::ostringstream out;
  out << 't';
  for (Index i = 0; i < tracking.e.rows(); ++i) out << ",e" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < tracking.times.size(); ++k) {
    out << fmt(tracking.times[k]);
    for (Index i = 0; i < tracking.e.rows(); ++i) {
      out << ',' << fmt(tracking.e(i, static_cast<Index>(k)));
    }
    out << '\n';
  }
  return out.str();
}

void write_outputs(const ExperimentReport& rep, const std::filesystem::path& out_dir,
                   bool emit_trajectory, bool with_timings) {
  std::filesystem::create_directories(out_dir);
  const auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream f(out_dir / file, std::ios::binary);
    if (!f) throw Error(ErrorKind::kConfig, "cannot write " + (out_dir / file).string());
    f << text;
  };
  write("report.json", report_json(rep, with_timings));
  write("iterations.csv", iterations_csv(rep, with_timings));
  // The refined controller is the headline result; fall back to the original.
  const AlgorithmReport* headline = rep.find(Algorithm::kRefined);
  if (!headline || !headline->ran || headline->failure) headline = rep.find(Algorithm::kOriginal);
  if (headline && headline->ran && !headline->failure) {
    write("tracking.csv", tracking_csv(headline->tracking));
  }
  for (const AlgorithmReport& r : rep.algorithms) {
    if (r.ran && !r.failure) {
      write("tracking_" + std::string(to_string(r.algorithm)) + ".csv",
            tracking_csv(r.tracking));
    }
  }
  if (emit_trajectory && rep.trajectory.points() > 0) {
    std::ostringstream traj;
    write_trajectory_csv(rep.trajectory, traj);
    write("trajectory.csv", traj.str());
  }
}

ExperimentConfig make_random_benchmark(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto random = [&](Index rows, Index cols) {
    MatrixXd M(rows, cols);
    for (Index c = 0; c < cols; ++c) {
      for (Index r = 0; r < rows; ++r) M(r, c) = normal(rng);
    }
    return M;
  };
  const Index n = 4, m = 2, p = 2, q = 2;

  for (int attempt = 0; attempt < 100; ++attempt) {
    ExperimentConfig cfg;
    cfg.name = "B3";
    MatrixXd M = random(n, n);
    Eigen::EigenSolver<MatrixXd> es(M, false);
    const double shift = es.eigenvalues().real().maxCoeff() + 0.5;
    cfg.plant.A = M - shift * MatrixXd::Identity(n, n);
    cfg.plant.B = random(n, m);
    cfg.plant.C = random(p, n);
    cfg.plant.D = random(n, q);
    cfg.plant.F = random(p, q);
    cfg.exo.E.resize(q, q);
    cfg.exo.E << 0.0, 1.0, -1.0, 0.0;
    cfg.weights.Q = MatrixXd::Identity(p, p);
    cfg.weights.R = MatrixXd::Identity(m, m);
    cfg.x0 = random(n, 1).col(0);
    cfg.v0 = VectorXd::Zero(q);
    cfg.v0(0) = 1.0;
    cfg.excitation.K0 = MatrixXd::Zero(m, n);
    const Index freqs = recommended_frequency_count(n, m, q);
    for (Index l = 0; l < freqs; ++l) {
      cfg.excitation.frequencies.push_back(0.3 + 0.45 * static_cast<double>(l));
      cfg.excitation.amplitudes.push_back(random(m, 1).col(0));
    }
    cfg.excitation.seed = seed;
    cfg.schedule = {0.0, 80, 0.1, 0.005, Quadrature::kSimpson};
    cfg.algorithm = Algorithm::kBoth;
    cfg.evaluation.x0 = cfg.x0;

    if (!is_hurwitz(cfg.plant.A)) continue;
    if (check_assumptions(cfg.plant, cfg.exo, cfg.weights).all_pass()) return cfg;
  }
  throw Error(ErrorKind::kNonConvergence,
              "make_random_benchmark: no admissible draw in 100 attempts");
}

}  // namespace aoor
