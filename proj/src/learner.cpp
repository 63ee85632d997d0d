#include "aoor/learner.hpp"

#include <chrono>
#include <limits>
#include <string>

#include "aoor/error.hpp"
#include "aoor/tensor_ops.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Solve and insist on full column rank.
LsqResult solve_full_rank(const MatrixXd& A, const VectorXd& b,
                          Index expected_cols, double rank_tol,
                          const std::string& what) {
  if (A.cols() != expected_cols) {
    throw Error(ErrorKind::kDimension,
                what + ": expected " + std::to_string(expected_cols) +
                    " unknowns, assembled " + std::to_string(A.cols()));
  }
  LsqResult sol = lsq_solve(A, b, rank_tol);
  if (sol.numerical_rank != A.cols()) {
    throw Error(ErrorKind::kRankDeficient,
                what + ": rank " + std::to_string(sol.numerical_rank) + " of " +
                    std::to_string(A.cols()) + " columns (" +
                    std::to_string(A.rows()) + " rows)");
  }
  return sol;
}

Eigen::LLT<MatrixXd> spd_factor(const MatrixXd& P, const std::string& what) {
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite,
                what + ": learned P is not positive definite; data too noisy or "
                       "excitation too weak");
  }
  return llt;
}

bool converged(const MatrixXd& P, const MatrixXd& P_prev,
               const LearnerConfig& cfg) {
  return (P - P_prev).norm() < cfg.eps * (1.0 + P.norm());
}

struct FullSolve {
  MatrixXd P, K_next, W;
  SolveRecord record;
};

FullSolve solve_full(const DataMatrices& data, Index i, int j,
                     const MatrixXd& K_j, const KnownMatrices& known,
                     const LearnerConfig& cfg) {
  const auto start = Clock::now();
  const Index n = data.n, m = data.m, q = data.q;
  const PsiPhi pp = assemble_psi_phi(data, i, K_j, known);
  const LsqResult sol =
      solve_full_rank(pp.psi, pp.phi, solve_dims(n, m, q).full, cfg.rank_tol,
                      "full solve (i=" + std::to_string(i) + ", j=" +
                          std::to_string(j) + ")");
  FullSolve out;
  out.P = unvecs(sol.solution.head(tri_size(n)), n);
  out.K_next = unvec(sol.solution.segment(tri_size(n), m * n), m, n);
  out.W = unvec(sol.solution.tail(q * n), q, n);
  out.record = {SolveRecord::Kind::kFull, j, i, pp.psi.cols(),
                sol.numerical_rank, elapsed_ms(start)};
  return out;
}

}  // namespace

SolveDims solve_dims(Index n, Index m, Index q) {
  return {tri_size(n) + (m + q) * n, n * q, tri_size(n) + m * n};
}

PsiPhi assemble_psi_phi(const DataMatrices& data, Index i, const MatrixXd& K_j,
                        const KnownMatrices& known) {
  const Index n = data.n, m = data.m, q = data.q;
  if (i < 0 || i >= static_cast<Index>(data.per_index.size())) {
    throw Error(ErrorKind::kDimension, "assemble_psi_phi: basis index out of range");
  }
  if (K_j.rows() != m || K_j.cols() != n) {
    throw Error(ErrorKind::kDimension, "assemble_psi_phi: K_j must be m x n");
  }
  const MatrixXd& R = known.weights.R;
  if (R.rows() != m || known.C.cols() != n) {
    throw Error(ErrorKind::kDimension, "assemble_psi_phi: R or C has the wrong shape");
  }
  const IndexData& d = data.per_index[static_cast<std::size_t>(i)];
  const MatrixXd In = MatrixXd::Identity(n, n);

  PsiPhi out;
  out.p_cols = tri_size(n);
  out.k_cols = m * n;
  out.w_cols = q * n;
  out.psi.resize(data.samples, out.p_cols + out.k_cols + out.w_cols);
  out.psi.leftCols(out.p_cols) = d.delta;
  out.psi.middleCols(out.p_cols, out.k_cols) =
      -2.0 * d.gamma_xx * kron(In, K_j.transpose() * R) -
      2.0 * d.gamma_xu * kron(In, R);
  out.psi.rightCols(out.w_cols) = -2.0 * d.gamma_xv;
  out.phi = -d.gamma_xx *
            vec(known.state_weight() + K_j.transpose() * R * K_j);
  return out;
}

VectorXd pack_unknowns(const MatrixXd& P, const MatrixXd& K_next,
                       const MatrixXd& W) {
  const VectorXd p = vecs(P).entries;
  const VectorXd k = vec(K_next);
  const VectorXd w = vec(W);
  VectorXd out(p.size() + k.size() + w.size());
  out << p, k, w;
  return out;
}

MatrixXd recover_D(const MatrixXd& W, const MatrixXd& P) {
  // W = D'P  =>  D = P^-1 W'
  return spd_factor(P, "recover_D").solve(W.transpose());
}

MatrixXd recover_S(const MatrixXd& D_hat, const MatrixXd& W_i,
                   const MatrixXd& P) {
  return D_hat - spd_factor(P, "recover_S").solve(W_i.transpose());
}

LearnResult original_learn(const DataMatrices& data, const MatrixXd& K0,
                           const KnownMatrices& known,
                           const LearnerConfig& cfg) {
  LearnResult result;
  MatrixXd K = K0;
  MatrixXd D_hat;
  bool done = false;
  for (int j = 0; j < cfg.max_iter; ++j) {
    FullSolve s = solve_full(data, 0, j, K, known, cfg);
    spd_factor(s.P, "original_learn");
    D_hat = recover_D(s.W, s.P);
    result.solves.push_back(s.record);
    result.history.push_back({j, s.P, K});
    K = s.K_next;
    if (j > 0 && converged(s.P, result.history[j - 1].P, cfg)) {
      done = true;
      break;
    }
  }
  if (!done) {
    throw Error(ErrorKind::kNonConvergence,
                "original_learn: no convergence within " +
                    std::to_string(cfg.max_iter) + " iterations");
  }
  result.j_star = result.history.back().j;
  result.K_next = K;
  result.model.D_hat = D_hat;

  // Per-basis solves at the converged policy.
  const PolicyIterate& last = result.history.back();
  for (Index i = 1; i < static_cast<Index>(data.per_index.size()); ++i) {
    FullSolve s = solve_full(data, i, -1, last.K, known, cfg);
    s.record.j = result.j_star;
    result.solves.push_back(s.record);
    result.model.S_hat.push_back(recover_S(D_hat, s.W, last.P));
  }
  return result;
}

Step1Result refined_step1(const DataMatrices& data, const MatrixXd& K0,
                          const KnownMatrices& known,
                          const LearnerConfig& cfg) {
  FullSolve s = solve_full(data, 0, 0, K0, known, cfg);
  Step1Result out;
  out.D_hat = recover_D(s.W, s.P);
  out.P0 = std::move(s.P);
  out.K1 = std::move(s.K_next);
  out.record = s.record;
  return out;
}

std::vector<MatrixXd> refined_step2(const DataMatrices& data,
                                    const MatrixXd& K0,
                                    const Step1Result& step1,
                                    const KnownMatrices& known,
                                    const LearnerConfig& cfg,
                                    std::vector<SolveRecord>* records) {
  const Index n = data.n, q = data.q;
  const Index expected = solve_dims(n, data.m, q).exo;
  const VectorXd p0 = vecs(step1.P0).entries;
  const VectorXd k1 = vec(step1.K1);
  std::vector<MatrixXd> S_hat;
  for (Index i = 1; i < static_cast<Index>(data.per_index.size()); ++i) {
    const auto start = Clock::now();
    const PsiPhi pp = assemble_psi_phi(data, i, K0, known);
    const VectorXd rhs = 0.5 * (pp.psi1() * p0 + pp.psi2() * k1 - pp.phi);
    const MatrixXd& G = data.per_index[static_cast<std::size_t>(i)].gamma_xv;
    const LsqResult sol = solve_full_rank(
        G, rhs, expected, cfg.rank_tol,
        "exosystem solve (i=" + std::to_string(i) + ")");
    const MatrixXd W_i = unvec(sol.solution, q, n);
    S_hat.push_back(recover_S(step1.D_hat, W_i, step1.P0));
    if (records) {
      records->push_back({SolveRecord::Kind::kExo, 0, i, G.cols(),
                          sol.numerical_rank, elapsed_ms(start)});
    }
  }
  return S_hat;
}

MatrixXd build_M_D(const MatrixXd& D_hat) {
  const Index n = D_hat.rows();
  return kron(MatrixXd::Identity(n, n), D_hat.transpose()) *
         duplication_matrix(n).entries;
}

LearnResult refined_step3_learn(const DataMatrices& data, const MatrixXd& K0,
                                const Step1Result& step1,
                                const KnownMatrices& known,
                                const LearnerConfig& cfg) {
  const Index n = data.n, m = data.m, q = data.q;
  const Index expected = solve_dims(n, m, q).reduced;

  LearnResult result;
  result.model.D_hat = step1.D_hat;
  result.model.M_D = build_M_D(step1.D_hat);
  result.history.push_back({0, step1.P0, K0});
  result.solves.push_back(step1.record);

  MatrixXd K = step1.K1;
  bool done = false;
  for (int j = 1; j < cfg.max_iter; ++j) {
    const auto start = Clock::now();
    const PsiPhi pp = assemble_psi_phi(data, 0, K, known);
    MatrixXd lhs(pp.psi.rows(), expected);
    lhs.leftCols(pp.p_cols) = pp.psi1() + pp.psi3() * result.model.M_D;
    lhs.rightCols(pp.k_cols) = pp.psi2();
    const LsqResult sol = solve_full_rank(
        lhs, pp.phi, expected, cfg.rank_tol,
        "reduced solve (j=" + std::to_string(j) + ")");
    const MatrixXd P = unvecs(sol.solution.head(tri_size(n)), n);
    spd_factor(P, "refined_step3_learn");
    result.solves.push_back({SolveRecord::Kind::kReduced, j, 0, lhs.cols(),
                             sol.numerical_rank, elapsed_ms(start)});
    result.history.push_back({j, P, K});
    K = unvec(sol.solution.tail(m * n), m, n);
    if (converged(P, result.history[j - 1].P, cfg)) {
      done = true;
      break;
    }
  }
  if (!done) {
    throw Error(ErrorKind::kNonConvergence,
                "refined_step3_learn: no convergence within " +
                    std::to_string(cfg.max_iter) + " iterations");
  }
  result.j_star = result.history.back().j;
  result.K_next = K;
  return result;
}

LearnResult refined_learn(const DataMatrices& data, const MatrixXd& K0,
                          const KnownMatrices& known,
                          const LearnerConfig& cfg) {
  const Step1Result step1 = refined_step1(data, K0, known, cfg);
  std::vector<SolveRecord> exo_records;
  std::vector<MatrixXd> S_hat =
      refined_step2(data, K0, step1, known, cfg, &exo_records);
  LearnResult result = refined_step3_learn(data, K0, step1, known, cfg);
  result.model.S_hat = std::move(S_hat);
  result.solves.insert(result.solves.begin() + 1, exo_records.begin(),
                       exo_records.end());
  return result;
}

RegulatorAssembly assemble_regulator_system(
    const BasisSet& basis, const std::vector<MatrixXd>& S_hat,
    const MatrixXd& D_hat, const MatrixXd& P, const MatrixXd& K_next,
    const MatrixXd& R, double rank_tol) {
  const Index n = D_hat.rows(), q = D_hat.cols(), m = K_next.rows();
  const Index h = basis.h;
  if (static_cast<Index>(S_hat.size()) != h + 1 || basis.size() != h + 2) {
    throw Error(ErrorKind::kDimension,
                "assemble_regulator_system: need S(X_i) for i = 1..h+1");
  }
  const Index nq = n * q;
  // P^-1 K' R plays the role of B.
  const MatrixXd B_hat = spd_factor(P, "assemble_regulator_system")
                             .solve(K_next.transpose() * R);

  RegulatorAssembly out;
  out.A_mat = MatrixXd::Zero(2 * nq, h + nq + m * q);
  for (Index k = 0; k < h; ++k) {
    const std::size_t slot = static_cast<std::size_t>(k + 2);
    out.A_mat.block(0, k, nq, 1) = vec(S_hat[slot - 1]);
    out.A_mat.block(nq, k, nq, 1) = vec(basis.X[slot]);
  }
  out.A_mat.block(0, h + nq, nq, m * q) =
      -kron(MatrixXd::Identity(q, q), B_hat);
  out.A_mat.block(nq, h, nq, nq) = -MatrixXd::Identity(nq, nq);
  out.b_vec.resize(2 * nq);
  out.b_vec << vec(D_hat - S_hat[0]), -vec(basis.X[1]);

  const LsqResult sol = lsq_solve(out.A_mat, out.b_vec, rank_tol);
  out.chi = sol.solution;
  out.residual = sol.residual_norm;
  out.rank = sol.numerical_rank;
  out.solution.alpha = out.chi.head(h);
  out.solution.X = unvec(out.chi.segment(h, nq), n, q);
  out.solution.U = unvec(out.chi.tail(m * q), m, q);
  return out;
}

Controller learned_controller(const MatrixXd& K_final,
                              const RegulatorSolution& reg) {
  if (K_final.cols() != reg.X.rows() || K_final.rows() != reg.U.rows()) {
    throw Error(ErrorKind::kDimension, "learned_controller: shape mismatch");
  }
  return {K_final, reg.U + K_final * reg.X};
}

double min_monotone_gap(const std::vector<PolicyIterate>& history) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j + 1 < history.size(); ++j) {
    const MatrixXd diff = history[j].P - history[j + 1].P;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (diff + diff.transpose()));
    gap = std::min(gap, es.eigenvalues().minCoeff());
  }
  return gap;
}

}  // namespace aoor
