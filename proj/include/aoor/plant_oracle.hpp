#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aoor {

inline constexpr double kHurwitzMargin = 1e-10;

/// x' = A x + B u + D v,  e = C x + F v
struct Plant {
  Eigen::MatrixXd A, B, C, D, F;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }
  Eigen::Index q() const { return D.cols(); }

  /// Throws on inconsistent shapes or a C without full row rank.
  void validate() const;
};

/// v' = E v
struct Exosystem {
  Eigen::MatrixXd E;

  Eigen::Index q() const { return E.rows(); }
};

struct CostWeights {
  Eigen::MatrixXd Q;  // p x p, symmetric PSD
  Eigen::MatrixXd R;  // m x m, symmetric PD

  void validate(Eigen::Index p, Eigen::Index m) const;
};

/// Checks plant/exosystem/weights shapes against each other.
void validate_problem(const Plant& plant, const Exosystem& exo,
                      const CostWeights& weights);

struct OracleSolution {
  Eigen::MatrixXd P_star;
  Eigen::MatrixXd K_star;
  int iterations_used = 0;
};

/// One policy-iteration step: P_j evaluates the policy K_j.
struct PolicyIterate {
  int j = 0;
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
};

struct KleinmanResult {
  OracleSolution solution;
  std::vector<PolicyIterate> history;
};

struct RegulatorSolution {
  Eigen::MatrixXd X;      // n x q
  Eigen::MatrixXd U;      // m x q
  Eigen::VectorXd alpha;  // h coefficients, empty for h = 0
};

struct Controller {
  Eigen::MatrixXd K;  // m x n
  Eigen::MatrixXd L;  // m x q
};

struct AssumptionReport {
  bool stabilizable = false;
  bool observable = false;
  bool regulator_solvable = false;
  std::vector<std::string> notes;

  bool all_pass() const {
    return stabilizable && observable && regulator_solvable;
  }
};

bool is_hurwitz(const Eigen::Ref<const Eigen::MatrixXd>& A);

/// Hautus test on every eigenvalue of A with real part >= -kHurwitzMargin.
bool is_stabilizable(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

/// Hautus test of (A, H) on every eigenvalue of A.
bool is_observable(const Eigen::Ref<const Eigen::MatrixXd>& A,
                   const Eigen::Ref<const Eigen::MatrixXd>& H);

/// Symmetric PSD square root.
Eigen::MatrixXd psd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& Q);

AssumptionReport check_assumptions(const Plant& plant, const Exosystem& exo,
                                   const CostWeights& weights);

/// Minimum-norm solution of X E = A X + B U + D, 0 = C X + F through the
/// stacked Kronecker system. Throws ErrorKind::kInconsistent when the
/// residual exceeds 1e-8.
RegulatorSolution solve_regulator_exact(const Plant& plant,
                                        const Exosystem& exo);

/// Residuals |XE - AX - BU - D| and |CX + F| (Frobenius).
std::pair<double, double> regulator_residuals(const Plant& plant,
                                              const Exosystem& exo,
                                              const Eigen::MatrixXd& X,
                                              const Eigen::MatrixXd& U);

/// Unique symmetric P with A_cl' P + P A_cl + W = 0.
Eigen::MatrixXd lyapunov_solve(const Eigen::Ref<const Eigen::MatrixXd>& A_cl,
                               const Eigen::Ref<const Eigen::MatrixXd>& W);

/// Model-based Kleinman iteration for
///   A'P + PA + C'QC - P B R^-1 B' P = 0.
/// Stops once |P_j - P_{j-1}|_F < eps.
KleinmanResult solve_are_kleinman(const Plant& plant,
                                  const CostWeights& weights,
                                  const Eigen::MatrixXd& K0, double eps = 1e-10,
                                  int max_iter = 100);

/// |A'P + PA + C'QC - P B R^-1 B' P|_F
double are_residual(const Plant& plant, const CostWeights& weights,
                    const Eigen::MatrixXd& P);

/// L = U + K X.
Controller synthesize_controller(const Eigen::MatrixXd& K,
                                 const RegulatorSolution& reg);

/// Test helper: one Kleinman step from K = 0. Only valid for Hurwitz A.
Eigen::MatrixXd default_stabilizing_gain(const Plant& plant,
                                         const CostWeights& weights);

}  // namespace aoor
