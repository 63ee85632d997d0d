#include "aoor/excitation.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

#include "aoor/error.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd ExcitationSpec::probe(double t, Index m) const {
  VectorXd u = VectorXd::Zero(m);
  for (std::size_t l = 0; l < frequencies.size(); ++l) {
    const double phase = l < phases.size() ? phases[l] : 0.0;
    u += amplitudes[l] * std::sin(frequencies[l] * t + phase);
  }
  return u;
}

Index recommended_frequency_count(Index n, Index m, Index q) {
  const Index unknowns = tri_size(n) + (m + q) * n;
  return (unknowns + m - 1) / m;
}

std::vector<std::string> ExcitationSpec::validate(Index n, Index m,
                                                  Index q) const {
  if (K0.rows() != m || K0.cols() != n) {
    throw Error(ErrorKind::kDimension, "excitation.K0 must be m x n");
  }
  if (amplitudes.size() != frequencies.size()) {
    throw Error(ErrorKind::kDimension,
                "excitation.amplitudes needs one entry per frequency");
  }
  if (!phases.empty() && phases.size() != frequencies.size()) {
    throw Error(ErrorKind::kDimension,
                "excitation.phases needs one entry per frequency");
  }
  for (const VectorXd& a : amplitudes) {
    if (a.size() != m) {
      throw Error(ErrorKind::kDimension, "excitation.amplitudes entries must have length m");
    }
  }
  std::vector<std::string> warnings;
  const std::set<double> distinct(frequencies.begin(), frequencies.end());
  const Index wanted = recommended_frequency_count(n, m, q);
  if (static_cast<Index>(distinct.size()) < wanted) {
    warnings.push_back("excitation uses " + std::to_string(distinct.size()) +
                       " distinct frequencies; " + std::to_string(wanted) +
                       " recommended");
  }
  return warnings;
}

Index SampleSchedule::steps_per_sample() const {
  if (!(sample_dt > 0.0) || !(integration_dt > 0.0)) {
    throw Error(ErrorKind::kConfig, "schedule: step sizes must be positive");
  }
  const double ratio = sample_dt / integration_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw Error(ErrorKind::kConfig,
                "schedule: integration_dt must divide sample_dt exactly");
  }
  const auto steps = static_cast<Index>(rounded);
  if (quadrature == Quadrature::kSimpson && steps % 2 != 0) {
    throw Error(ErrorKind::kConfig,
                "schedule: Simpson quadrature needs an even number of steps per sample");
  }
  return steps;
}

Index required_sample_count(Index n, Index m, Index q) {
  return tri_size(n) + (m + q) * n;
}

TrajectoryLog simulate_policy(const Plant& plant, const Exosystem& exo,
                              const InputPolicy& policy, double t0,
                              Index steps, double dt, const VectorXd& x0,
                              const VectorXd& v0) {
  const Index n = plant.n(), m = plant.m(), q = plant.q();
  if (x0.size() != n || v0.size() != q) {
    throw Error(ErrorKind::kDimension, "simulate: x0 must have length n and v0 length q");
  }
  if (policy.K.rows() != m || policy.K.cols() != n) {
    throw Error(ErrorKind::kDimension, "simulate: feedback gain must be m x n");
  }
  const bool has_ff = policy.L.size() > 0;
  if (has_ff && (policy.L.rows() != m || policy.L.cols() != q)) {
    throw Error(ErrorKind::kDimension, "simulate: feedforward gain must be m x q");
  }

  const auto input = [&](double t, const VectorXd& x, const VectorXd& v) {
    VectorXd u = -policy.K * x;
    if (has_ff) u += policy.L * v;
    if (policy.probe) u += policy.probe->probe(t, m);
    return u;
  };
  const auto xdot = [&](double t, const VectorXd& x, const VectorXd& v) {
    return VectorXd(plant.A * x + plant.B * input(t, x, v) + plant.D * v);
  };

  TrajectoryLog log;
  log.times.resize(static_cast<std::size_t>(steps + 1));
  log.x.resize(n, steps + 1);
  log.u.resize(m, steps + 1);
  log.v.resize(q, steps + 1);

  VectorXd x = x0, v = v0;
  const double blowup = 1e12 * (1.0 + x0.norm() + v0.norm());
  for (Index k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    log.times[static_cast<std::size_t>(k)] = t;
    log.x.col(k) = x;
    log.v.col(k) = v;
    log.u.col(k) = input(t, x, v);
    if (!x.allFinite() || x.norm() > blowup) {
      throw Error(ErrorKind::kDivergence,
                  "simulate: state diverged at t = " + std::to_string(t));
    }
    if (k == steps) break;

    const double h2 = 0.5 * dt;
    const VectorXd kv1 = exo.E * v;
    const VectorXd kx1 = xdot(t, x, v);
    const VectorXd v2 = v + h2 * kv1, x2 = x + h2 * kx1;
    const VectorXd kv2 = exo.E * v2;
    const VectorXd kx2 = xdot(t + h2, x2, v2);
    const VectorXd v3 = v + h2 * kv2, x3 = x + h2 * kx2;
    const VectorXd kv3 = exo.E * v3;
    const VectorXd kx3 = xdot(t + h2, x3, v3);
    const VectorXd v4 = v + dt * kv3, x4 = x + dt * kx3;
    const VectorXd kv4 = exo.E * v4;
    const VectorXd kx4 = xdot(t + dt, x4, v4);
    x += (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    v += (dt / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
  }
  return log;
}

TrajectoryLog simulate(const Plant& plant, const Exosystem& exo,
                       const ExcitationSpec& excitation,
                       const SampleSchedule& schedule, const VectorXd& x0,
                       const VectorXd& v0) {
  excitation.validate(plant.n(), plant.m(), plant.q());
  const Index steps = schedule.steps_per_sample() * schedule.sample_count;
  // Grid times are t0 + k * dt so sample instants land exactly on the grid.
  InputPolicy policy{excitation.K0, MatrixXd(), &excitation};
  return simulate_policy(plant, exo, policy, schedule.t0, steps,
                         schedule.integration_dt, x0, v0);
}

VectorXd error_state(const Eigen::Ref<const VectorXd>& x,
                     const Eigen::Ref<const VectorXd>& v,
                     const Eigen::Ref<const MatrixXd>& Xi) {
  if (Xi.rows() != x.size() || Xi.cols() != v.size()) {
    throw Error(ErrorKind::kDimension, "error_state: X_i must be n x q");
  }
  return x - Xi * v;
}

MatrixXd delta_rows(const Eigen::Ref<const MatrixXd>& a, Index steps_per_sample,
                    Index sample_count) {
  const Index dim = a.rows();
  if (a.cols() < steps_per_sample * sample_count + 1) {
    throw Error(ErrorKind::kDimension, "delta_rows: log shorter than the schedule");
  }
  MatrixXd out(sample_count, tri_size(dim));
  if (dim == 0) return out;
  VectorXd previous = vecv(a.col(0)).entries;
  for (Index k = 0; k < sample_count; ++k) {
    VectorXd current = vecv(a.col((k + 1) * steps_per_sample)).entries;
    out.row(k) = (current - previous).transpose();
    previous = std::move(current);
  }
  return out;
}

MatrixXd gamma_rows(const Eigen::Ref<const MatrixXd>& a,
                    const Eigen::Ref<const MatrixXd>& b, Index steps_per_sample,
                    Index sample_count, double dt, Quadrature rule) {
  const Index da = a.rows(), db = b.rows();
  if (rule == Quadrature::kSimpson && steps_per_sample % 2 != 0) {
    throw Error(ErrorKind::kDimension, "gamma_rows: Simpson needs an even step count");
  }
  std::vector<double> weights(static_cast<std::size_t>(steps_per_sample + 1));
  for (Index g = 0; g <= steps_per_sample; ++g) {
    const bool end = g == 0 || g == steps_per_sample;
    weights[static_cast<std::size_t>(g)] =
        rule == Quadrature::kTrapezoid ? (end ? 0.5 * dt : dt)
                                       : (end ? dt / 3.0 : (g % 2 ? 4.0 : 2.0) * dt / 3.0);
  }
  const Index needed = steps_per_sample * sample_count + 1;
  if (a.cols() < needed || b.cols() < needed) {
    throw Error(ErrorKind::kDimension, "gamma_rows: log shorter than the schedule");
  }
  MatrixXd out = MatrixXd::Zero(sample_count, da * db);
  for (Index k = 0; k < sample_count; ++k) {
    for (Index g = 0; g <= steps_per_sample; ++g) {
      const Index col = k * steps_per_sample + g;
      const double w = weights[static_cast<std::size_t>(g)];
      for (Index i = 0; i < da; ++i) {
        const double ai = w * a(i, col);
        for (Index j = 0; j < db; ++j) out(k, i * db + j) += ai * b(j, col);
      }
    }
  }
  return out;
}

DataMatrices build_data_matrices(const TrajectoryLog& log,
                                 const BasisSet& basis,
                                 const SampleSchedule& schedule) {
  const Index steps = schedule.steps_per_sample();
  const Index s = schedule.sample_count;
  if (s < 1) throw Error(ErrorKind::kConfig, "build_data_matrices: no samples");
  if (log.points() < steps * s + 1) {
    throw Error(ErrorKind::kDimension,
                "build_data_matrices: log does not cover every sample instant");
  }
  for (Index k = 0; k <= s; ++k) {
    const double expected = schedule.t0 + static_cast<double>(k) * schedule.sample_dt;
    const double actual = log.times[static_cast<std::size_t>(k * steps)];
    if (std::abs(actual - expected) > 1e-9 * (1.0 + std::abs(expected))) {
      throw Error(ErrorKind::kDimension,
                  "build_data_matrices: sample instant " + std::to_string(expected) +
                      " is off the integration grid");
    }
  }

  DataMatrices data;
  data.n = log.x.rows();
  data.m = log.u.rows();
  data.q = log.v.rows();
  data.samples = s;
  data.per_index.resize(basis.X.size());
  const double dt = schedule.integration_dt;
  const auto columns = steps * s + 1;
  const MatrixXd x = log.x.leftCols(columns);
  const MatrixXd u = log.u.leftCols(columns);
  const MatrixXd v = log.v.leftCols(columns);
  for (std::size_t i = 0; i < basis.X.size(); ++i) {
    const MatrixXd xbar = x - basis.X[i] * v;
    IndexData& d = data.per_index[i];
    d.delta = delta_rows(xbar, steps, s);
    d.gamma_xx = gamma_rows(xbar, xbar, steps, s, dt, schedule.quadrature);
    d.gamma_xu = gamma_rows(xbar, u, steps, s, dt, schedule.quadrature);
    d.gamma_xv = gamma_rows(xbar, v, steps, s, dt, schedule.quadrature);
  }
  return data;
}

namespace {

RankCheck make_check(std::string name, const MatrixXd& M, Index required,
                     double rank_tol) {
  RankCheck c;
  c.name = std::move(name);
  c.rows = M.rows();
  c.cols = M.cols();
  c.required = required;
  c.achieved = numerical_rank(M, rank_tol);
  c.smallest_kept_singular_value = smallest_kept_singular_value(M, rank_tol);
  c.pass = c.achieved >= required;
  return c;
}

MatrixXd hcat(std::initializer_list<const MatrixXd*> blocks) {
  Index rows = 0, cols = 0;
  for (const MatrixXd* b : blocks) {
    rows = b->rows();
    cols += b->cols();
  }
  MatrixXd out(rows, cols);
  Index c = 0;
  for (const MatrixXd* b : blocks) {
    out.middleCols(c, b->cols()) = *b;
    c += b->cols();
  }
  return out;
}

}  // namespace

bool RankDiagnostics::all_pass() const {
  for (const RankCheck& c : checks) {
    if (!c.informational && !c.pass) return false;
  }
  return true;
}

Index RankDiagnostics::counted() const {
  Index k = 0;
  for (const RankCheck& c : checks) k += c.informational ? 0 : 1;
  return k;
}

Index RankDiagnostics::counted_full_size() const {
  Index k = 0;
  for (const RankCheck& c : checks) k += (!c.informational && c.full_size) ? 1 : 0;
  return k;
}

RankCheck check_rank_original(const DataMatrices& data, Index i,
                              double rank_tol) {
  if (i < 0 || i >= static_cast<Index>(data.per_index.size())) {
    throw Error(ErrorKind::kDimension, "check_rank_original: index out of range");
  }
  const IndexData& d = data.per_index[static_cast<std::size_t>(i)];
  const Index required = tri_size(data.n) + (data.m + data.q) * data.n;
  RankCheck c = make_check(
      "full[i=" + std::to_string(i) + "]",
      hcat({&d.gamma_xx, &d.gamma_xu, &d.gamma_xv}), required, rank_tol);
  c.full_size = true;
  return c;
}

RankDiagnostics check_rank_original_all(const DataMatrices& data,
                                        double rank_tol) {
  RankDiagnostics diag;
  for (Index i = 0; i < static_cast<Index>(data.per_index.size()); ++i) {
    diag.checks.push_back(check_rank_original(data, i, rank_tol));
  }
  return diag;
}

RankDiagnostics check_rank_refined(const DataMatrices& data, double rank_tol) {
  RankDiagnostics diag;
  diag.checks.push_back(check_rank_original(data, 0, rank_tol));
  for (Index i = 1; i < static_cast<Index>(data.per_index.size()); ++i) {
    const IndexData& d = data.per_index[static_cast<std::size_t>(i)];
    diag.checks.push_back(make_check("exo[i=" + std::to_string(i) + "]",
                                     d.gamma_xv, data.q * data.n, rank_tol));
  }
  const IndexData& d0 = data.per_index.front();
  RankCheck reduced = make_check("reduced[i=0]", hcat({&d0.gamma_xx, &d0.gamma_xu}),
                                 tri_size(data.n) + data.m * data.n, rank_tol);
  reduced.informational = true;
  diag.checks.push_back(std::move(reduced));
  return diag;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(const TrajectoryLog& log, std::ostream& out) {
  out << 't';
  for (Index i = 0; i < log.x.rows(); ++i) out << ",x" << i + 1;
  for (Index i = 0; i < log.u.rows(); ++i) out << ",u" << i + 1;
  for (Index i = 0; i < log.v.rows(); ++i) out << ",v" << i + 1;
  out << '\n';
  for (Index k = 0; k < log.points(); ++k) {
    out << format_double(log.times[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < log.x.rows(); ++i) out << ',' << format_double(log.x(i, k));
    for (Index i = 0; i < log.u.rows(); ++i) out << ',' << format_double(log.u(i, k));
    for (Index i = 0; i < log.v.rows(); ++i) out << ',' << format_double(log.v(i, k));
    out << '\n';
  }
}

}  // namespace aoor
