#pragma once

#include <vector>

#include <Eigen/Dense>

#include "aoor/basis.hpp"
#include "aoor/excitation.hpp"
#include "aoor/plant_oracle.hpp"

namespace aoor {

/// What the learner may use: the output map and the cost. A, B, D and E are
/// never passed in.
struct KnownMatrices {
  Eigen::MatrixXd C;
  CostWeights weights;

  Eigen::MatrixXd state_weight() const {
    return C.transpose() * weights.Q * C;
  }
};

struct LearnerConfig {
  double eps = 1e-6;           // |P_j - P_{j-1}|_F < eps (1 + |P_j|_F)
  int max_iter = 50;
  double rank_tol = kDefaultRankTol;
  double tol_mono_rel = 1e-6;  // monotonicity slack, times |P_0|_F
};

/// Unknown counts for the three kinds of least-squares solves.
struct SolveDims {
  Eigen::Index full = 0;     // n(n+1)/2 + (m+q)n
  Eigen::Index exo = 0;      // nq
  Eigen::Index reduced = 0;  // n(n+1)/2 + mn
};

SolveDims solve_dims(Eigen::Index n, Eigen::Index m, Eigen::Index q);

struct PsiPhi {
  Eigen::MatrixXd psi;
  Eigen::VectorXd phi;

  // Column ranges of the three unknown groups.
  Eigen::Index p_cols = 0, k_cols = 0, w_cols = 0;
  auto psi1() const { return psi.leftCols(p_cols); }
  auto psi2() const { return psi.middleCols(p_cols, k_cols); }
  auto psi3() const { return psi.rightCols(w_cols); }
};

/// Psi_ij = [delta, -2 G_xx (I (x) K_j'R) - 2 G_xu (I (x) R), -2 G_xv],
/// Phi_ij = -G_xx vec(C'QC + K_j' R K_j).
PsiPhi assemble_psi_phi(const DataMatrices& data, Eigen::Index i,
                        const Eigen::MatrixXd& K_j, const KnownMatrices& known);

/// Unknown vector [vecs(P_j); vec(K_{j+1}); vec((D - S(X_i))' P_j)].
Eigen::VectorXd pack_unknowns(const Eigen::MatrixXd& P,
                              const Eigen::MatrixXd& K_next,
                              const Eigen::MatrixXd& W);

struct LearnedModelData {
  Eigen::MatrixXd D_hat;               // n x q
  std::vector<Eigen::MatrixXd> S_hat;  // i = 1..h+1
  Eigen::MatrixXd M_D;                 // nq x n(n+1)/2; empty for the original path
};

struct SolveRecord {
  enum class Kind { kFull, kExo, kReduced };
  Kind kind = Kind::kFull;
  int j = 0;                 // policy-iteration index (-1 for per-basis solves)
  Eigen::Index i = 0;        // basis index
  Eigen::Index cols = 0;
  Eigen::Index rank = 0;
  double wallclock_ms = 0.0;
};

struct LearnResult {
  std::vector<PolicyIterate> history;  // (j, P_j, K_j) for j = 0..j*
  Eigen::MatrixXd K_next;              // K_{j*+1}
  LearnedModelData model;
  int j_star = 0;
  std::vector<SolveRecord> solves;

  const Eigen::MatrixXd& P_final() const { return history.back().P; }
};

/// W = D'P recovered as D = (W P^-1)'. P must be positive definite.
Eigen::MatrixXd recover_D(const Eigen::MatrixXd& W, const Eigen::MatrixXd& P);

/// S(X_i) = D - (W_i P^-1)'.
Eigen::MatrixXd recover_S(const Eigen::MatrixXd& D_hat,
                          const Eigen::MatrixXd& W_i,
                          const Eigen::MatrixXd& P);

/// Full-size iteration at i = 0 until convergence, then one full-size solve
/// per basis index at the converged j.
LearnResult original_learn(const DataMatrices& data, const Eigen::MatrixXd& K0,
                           const KnownMatrices& known,
                           const LearnerConfig& cfg = {});

struct Step1Result {
  Eigen::MatrixXd P0;
  Eigen::MatrixXd K1;
  Eigen::MatrixXd D_hat;
  SolveRecord record;
};

Step1Result refined_step1(const DataMatrices& data, const Eigen::MatrixXd& K0,
                          const KnownMatrices& known,
                          const LearnerConfig& cfg = {});

/// One nq-column solve per basis index i = 1..h+1.
std::vector<Eigen::MatrixXd> refined_step2(const DataMatrices& data,
                                           const Eigen::MatrixXd& K0,
                                           const Step1Result& step1,
                                           const KnownMatrices& known,
                                           const LearnerConfig& cfg = {},
                                           std::vector<SolveRecord>* records = nullptr);

/// M_D = (I_n (x) D') M.
Eigen::MatrixXd build_M_D(const Eigen::MatrixXd& D_hat);

/// Reduced iteration j = 1, 2, ... with D fixed from step 1. The returned
/// history starts with the step-1 iterate (j = 0).
LearnResult refined_step3_learn(const DataMatrices& data,
                                const Eigen::MatrixXd& K0,
                                const Step1Result& step1,
                                const KnownMatrices& known,
                                const LearnerConfig& cfg = {});

/// Steps 1-3 in sequence.
LearnResult refined_learn(const DataMatrices& data, const Eigen::MatrixXd& K0,
                          const KnownMatrices& known,
                          const LearnerConfig& cfg = {});

struct RegulatorAssembly {
  Eigen::MatrixXd A_mat;  // 2nq x (h + nq + mq)
  Eigen::VectorXd b_vec;  // 2nq
  Eigen::VectorXd chi;    // [alpha_2..alpha_{h+1}; vec(X); vec(U)]
  double residual = 0.0;
  Eigen::Index rank = 0;
  RegulatorSolution solution;
};

/// Solves the regulator equations from learned quantities. P and K_next
/// enter only through P^-1 K_next' R, which equals B at the exact solution.
RegulatorAssembly assemble_regulator_system(
    const BasisSet& basis, const std::vector<Eigen::MatrixXd>& S_hat,
    const Eigen::MatrixXd& D_hat, const Eigen::MatrixXd& P,
    const Eigen::MatrixXd& K_next, const Eigen::MatrixXd& R,
    double rank_tol = kDefaultRankTol);

/// L = U + K X, computed from learned quantities only.
Controller learned_controller(const Eigen::MatrixXd& K_final,
                              const RegulatorSolution& reg);

/// min eig(P_j - P_{j+1}) over the history (+inf for a single iterate).
double min_monotone_gap(const std::vector<PolicyIterate>& history);

}  // namespace aoor
