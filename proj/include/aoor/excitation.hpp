#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aoor/basis.hpp"
#include "aoor/plant_oracle.hpp"
#include "aoor/tensor_ops.hpp"

namespace aoor {

/// Exploratory input u = -K0 x + sum_l amplitudes[l] sin(frequencies[l] t + phases[l]).
struct ExcitationSpec {
  Eigen::MatrixXd K0;                       // m x n
  std::vector<Eigen::VectorXd> amplitudes;  // one m-vector per frequency
  std::vector<double> frequencies;          // rad/s
  std::vector<double> phases;               // rad
  std::uint64_t seed = 0;

  Eigen::VectorXd probe(double t, Eigen::Index m) const;

  /// Shape errors throw; the return value holds non-fatal warnings
  /// (e.g. fewer distinct frequencies than recommended).
  std::vector<std::string> validate(Eigen::Index n, Eigen::Index m,
                                    Eigen::Index q) const;
};

/// Recommended minimum number of distinct probing frequencies.
Eigen::Index recommended_frequency_count(Eigen::Index n, Eigen::Index m,
                                         Eigen::Index q);

/// Rule used for the Gamma integrals on the integration grid.
enum class Quadrature { kTrapezoid, kSimpson };

/// Samples t_k = t0 + k * sample_dt, k = 0..sample_count, integrated on a
/// grid of step integration_dt that divides sample_dt exactly.
struct SampleSchedule {
  double t0 = 0.0;
  Eigen::Index sample_count = 0;
  double sample_dt = 0.1;
  double integration_dt = 0.005;
  // Simpson needs an even number of steps per sample interval.
  Quadrature quadrature = Quadrature::kTrapezoid;

  /// Integration steps per sample interval. Throws if sample_dt is not an
  /// integer multiple of integration_dt, or if Simpson gets an odd count.
  Eigen::Index steps_per_sample() const;
  double horizon() const { return sample_count * sample_dt; }
};

/// Minimum sample count: n(n+1)/2 + (m+q) n.
Eigen::Index required_sample_count(Eigen::Index n, Eigen::Index m,
                                   Eigen::Index q);

/// Signals on the integration grid, one column per grid point.
struct TrajectoryLog {
  std::vector<double> times;
  Eigen::MatrixXd x;  // n x N
  Eigen::MatrixXd u;  // m x N
  Eigen::MatrixXd v;  // q x N

  Eigen::Index points() const { return static_cast<Eigen::Index>(times.size()); }
};

/// Generic state-feedback input u = -K x + L v + probe(t).
struct InputPolicy {
  Eigen::MatrixXd K;  // m x n
  Eigen::MatrixXd L;  // m x q; empty means zero
  const ExcitationSpec* probe = nullptr;
};

/// Fixed-step RK4 on the joint (x, v) system. Throws ErrorKind::kDivergence
/// on non-finite or exploding states.
TrajectoryLog simulate_policy(const Plant& plant, const Exosystem& exo,
                              const InputPolicy& policy, double t0,
                              Eigen::Index steps, double dt,
                              const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& v0);

/// Learning experiment: u = -K0 x + probe(t) over [t0, t0 + s * sample_dt].
TrajectoryLog simulate(const Plant& plant, const Exosystem& exo,
                       const ExcitationSpec& excitation,
                       const SampleSchedule& schedule,
                       const Eigen::VectorXd& x0, const Eigen::VectorXd& v0);

/// x - X_i v
Eigen::VectorXd error_state(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& v,
                            const Eigen::Ref<const Eigen::MatrixXd>& Xi);

/// Row k: vecv(a(t_{k+1})) - vecv(a(t_k)). `a` holds one column per grid point.
Eigen::MatrixXd delta_rows(const Eigen::Ref<const Eigen::MatrixXd>& a,
                           Eigen::Index steps_per_sample,
                           Eigen::Index sample_count);

/// Row k: integral of a (x) b over [t_k, t_{k+1}] by the composite rule.
Eigen::MatrixXd gamma_rows(const Eigen::Ref<const Eigen::MatrixXd>& a,
                           const Eigen::Ref<const Eigen::MatrixXd>& b,
                           Eigen::Index steps_per_sample,
                           Eigen::Index sample_count, double dt,
                           Quadrature rule = Quadrature::kTrapezoid);

/// delta / Gamma blocks for one error coordinate x_i = x - X_i v.
struct IndexData {
  Eigen::MatrixXd delta;     // s x n(n+1)/2
  Eigen::MatrixXd gamma_xx;  // s x n^2
  Eigen::MatrixXd gamma_xu;  // s x nm
  Eigen::MatrixXd gamma_xv;  // s x nq
};

struct DataMatrices {
  Eigen::Index n = 0, m = 0, q = 0;
  Eigen::Index samples = 0;
  std::vector<IndexData> per_index;  // i = 0..h+1

  Eigen::Index h() const {
    return static_cast<Eigen::Index>(per_index.size()) - 2;
  }
};

DataMatrices build_data_matrices(const TrajectoryLog& log,
                                 const BasisSet& basis,
                                 const SampleSchedule& schedule);

struct RankCheck {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index required = 0;
  Eigen::Index achieved = 0;
  double smallest_kept_singular_value = 0.0;
  bool full_size = false;  // involves all n(n+1)/2 + (m+q)n unknowns
  bool informational = false;  // implied by another check, not counted
  bool pass = false;
};

struct RankDiagnostics {
  std::vector<RankCheck> checks;

  bool all_pass() const;
  /// Checks that gate an algorithm (informational entries excluded).
  Eigen::Index counted() const;
  Eigen::Index counted_full_size() const;
};

/// rank([G_xx, G_xu, G_xv]) for index i must reach n(n+1)/2 + (m+q)n.
RankCheck check_rank_original(const DataMatrices& data, Eigen::Index i,
                              double rank_tol = kDefaultRankTol);

/// All conditions the original algorithm needs: one per i = 0..h+1.
RankDiagnostics check_rank_original_all(const DataMatrices& data,
                                        double rank_tol = kDefaultRankTol);

/// Full condition at i = 0, rank(G_{x_i v}) = qn for i = 1..h+1, plus the
/// reduced [G_xx, G_xu] condition at i = 0 (reported, implied by the first).
RankDiagnostics check_rank_refined(const DataMatrices& data,
                                   double rank_tol = kDefaultRankTol);

/// CSV with header t,x1..xn,u1..um,v1..vq and round-trippable decimals.
void write_trajectory_csv(const TrajectoryLog& log, std::ostream& out);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

}  // namespace aoor
