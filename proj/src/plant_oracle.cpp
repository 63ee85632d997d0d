#include "aoor/plant_oracle.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "aoor/error.hpp"
#include "aoor/tensor_ops.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

[[noreturn]] void dim_error(const std::string& what) {
  throw Error(ErrorKind::kDimension, what);
}

std::string shape(const MatrixXd& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

Index complex_rank(const MatrixXcd& M, double tol) {
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  Index r = 0;
  while (r < sv.size() && sv(r) >= tol * sv(0)) ++r;
  return r;
}

struct StackedRegulator {
  MatrixXd lhs;
  VectorXd rhs;
};

StackedRegulator stack_regulator(const Plant& plant, const Exosystem& exo) {
  const Index n = plant.n(), m = plant.m(), p = plant.p(), q = plant.q();
  const MatrixXd In = MatrixXd::Identity(n, n);
  const MatrixXd Iq = MatrixXd::Identity(q, q);

  StackedRegulator s;
  s.lhs = MatrixXd::Zero(n * q + p * q, n * q + m * q);
  s.lhs.topLeftCorner(n * q, n * q) =
      kron(exo.E.transpose(), In) - kron(Iq, plant.A);
  s.lhs.topRightCorner(n * q, m * q) = -kron(Iq, plant.B);
  s.lhs.bottomLeftCorner(p * q, n * q) = kron(Iq, plant.C);
  s.rhs.resize(n * q + p * q);
  s.rhs << vec(plant.D), -vec(plant.F);
  return s;
}

}  // namespace

void Plant::validate() const {
  const Index nn = A.rows();
  if (nn < 1 || A.cols() != nn) dim_error("plant.A must be square, got " + shape(A));
  if (B.rows() != nn || B.cols() < 1) dim_error("plant.B must be n x m, got " + shape(B));
  if (C.cols() != nn || C.rows() < 1) dim_error("plant.C must be p x n, got " + shape(C));
  if (D.rows() != nn) dim_error("plant.D must be n x q, got " + shape(D));
  if (F.rows() != C.rows() || F.cols() != D.cols()) {
    dim_error("plant.F must be p x q, got " + shape(F));
  }
  if (C.rows() > nn || numerical_rank(C) != C.rows()) {
    dim_error("plant.C must have full row rank");
  }
}

void CostWeights::validate(Index p, Index m) const {
  if (Q.rows() != p || Q.cols() != p) dim_error("weights.Q must be p x p, got " + shape(Q));
  if (R.rows() != m || R.cols() != m) dim_error("weights.R must be m x m, got " + shape(R));
  const auto sym_ok = [](const MatrixXd& M) {
    return (M - M.transpose()).norm() <= kSymmetryTol * (1.0 + M.norm());
  };
  if (!sym_ok(Q)) throw Error(ErrorKind::kAsymmetric, "weights.Q is not symmetric");
  if (!sym_ok(R)) throw Error(ErrorKind::kAsymmetric, "weights.R is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eq(Q), er(R);
  if (eq.eigenvalues().minCoeff() < -1e-12) {
    throw Error(ErrorKind::kNotPositiveDefinite, "weights.Q is not positive semidefinite");
  }
  if (er.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorKind::kNotPositiveDefinite, "weights.R is not positive definite");
  }
}

void validate_problem(const Plant& plant, const Exosystem& exo,
                      const CostWeights& weights) {
  plant.validate();
  if (exo.E.rows() != exo.E.cols()) dim_error("plant.E must be square, got " + shape(exo.E));
  if (exo.E.rows() != plant.q()) {
    dim_error("plant.E must be q x q with q = cols(D) = " + std::to_string(plant.q()));
  }
  weights.validate(plant.p(), plant.m());
}

bool is_hurwitz(const Eigen::Ref<const MatrixXd>& A) {
  if (A.rows() != A.cols()) dim_error("is_hurwitz: matrix not square");
  if (A.size() == 0) return true;
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff() < -kHurwitzMargin;
}

bool is_stabilizable(const Eigen::Ref<const MatrixXd>& A,
                     const Eigen::Ref<const MatrixXd>& B) {
  const Index n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (lambda.real() < -kHurwitzMargin) continue;
    MatrixXcd H(n, n + B.cols());
    H.leftCols(n) = lambda * MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
    H.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (complex_rank(H, 1e-10) < n) return false;
  }
  return true;
}

bool is_observable(const Eigen::Ref<const MatrixXd>& A,
                   const Eigen::Ref<const MatrixXd>& H) {
  const Index n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  for (Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    MatrixXcd O(n + H.rows(), n);
    O.topRows(n) = lambda * MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
    O.bottomRows(H.rows()) = H.cast<std::complex<double>>();
    if (complex_rank(O, 1e-10) < n) return false;
  }
  return true;
}

MatrixXd psd_sqrt(const Eigen::Ref<const MatrixXd>& Q) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Q + Q.transpose()));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

AssumptionReport check_assumptions(const Plant& plant, const Exosystem& exo,
                                   const CostWeights& weights) {
  AssumptionReport report;
  report.stabilizable = is_stabilizable(plant.A, plant.B);
  if (!report.stabilizable) report.notes.emplace_back("(A,B) is not stabilizable");

  report.observable = is_observable(plant.A, psd_sqrt(weights.Q) * plant.C);
  if (!report.observable) report.notes.emplace_back("(A, sqrt(Q) C) is not observable");

  const StackedRegulator s = stack_regulator(plant, exo);
  const LsqResult sol = lsq_solve(s.lhs, s.rhs);
  report.regulator_solvable = sol.residual_norm <= 1e-8 * (1.0 + s.rhs.norm());
  if (!report.regulator_solvable) {
    report.notes.emplace_back("regulator equations are inconsistent (residual " +
                              std::to_string(sol.residual_norm) + ")");
  }
  return report;
}

RegulatorSolution solve_regulator_exact(const Plant& plant,
                                        const Exosystem& exo) {
  const Index n = plant.n(), m = plant.m(), q = plant.q();
  const StackedRegulator s = stack_regulator(plant, exo);
  const LsqResult sol = lsq_solve(s.lhs, s.rhs);
  if (sol.residual_norm > 1e-8 * (1.0 + s.rhs.norm())) {
    throw Error(ErrorKind::kInconsistent,
                "regulator equations have no solution (residual " +
                    std::to_string(sol.residual_norm) + ")");
  }
  RegulatorSolution reg;
  reg.X = unvec(sol.solution.head(n * q), n, q);
  reg.U = unvec(sol.solution.tail(m * q), m, q);
  return reg;
}

std::pair<double, double> regulator_residuals(const Plant& plant,
                                              const Exosystem& exo,
                                              const MatrixXd& X,
                                              const MatrixXd& U) {
  const double sylvester =
      (X * exo.E - plant.A * X - plant.B * U - plant.D).norm();
  const double output = (plant.C * X + plant.F).norm();
  return {sylvester, output};
}

MatrixXd lyapunov_solve(const Eigen::Ref<const MatrixXd>& A_cl,
                        const Eigen::Ref<const MatrixXd>& W) {
  const Index n = A_cl.rows();
  if (A_cl.cols() != n || W.rows() != n || W.cols() != n) {
    dim_error("lyapunov_solve: A_cl and W must be n x n");
  }
  if (!is_hurwitz(A_cl)) {
    throw Error(ErrorKind::kNotHurwitz, "lyapunov_solve: A_cl is not Hurwitz");
  }
  const MatrixXd In = MatrixXd::Identity(n, n);
  const MatrixXd At = A_cl.transpose();
  // vec(A'P + PA) = (I (x) A' + A' (x) I) vec(P)
  const MatrixXd L = kron(In, At) + kron(At, In);
  const VectorXd p = L.fullPivLu().solve(-vec(0.5 * (W + W.transpose())));
  const MatrixXd P = unvec(p, n, n);
  return 0.5 * (P + P.transpose());
}

double are_residual(const Plant& plant, const CostWeights& weights,
                    const MatrixXd& P) {
  const MatrixXd& A = plant.A;
  const MatrixXd& B = plant.B;
  const MatrixXd CQC = plant.C.transpose() * weights.Q * plant.C;
  return (A.transpose() * P + P * A + CQC -
          P * B * weights.R.ldlt().solve(B.transpose() * P))
      .norm();
}

KleinmanResult solve_are_kleinman(const Plant& plant,
                                  const CostWeights& weights,
                                  const MatrixXd& K0, double eps,
                                  int max_iter) {
  if (K0.rows() != plant.m() || K0.cols() != plant.n()) {
    dim_error("solve_are_kleinman: K0 must be m x n, got " + shape(K0));
  }
  if (!is_hurwitz(plant.A - plant.B * K0)) {
    throw Error(ErrorKind::kNotHurwitz, "solve_are_kleinman: K0 is not stabilizing");
  }
  const MatrixXd CQC = plant.C.transpose() * weights.Q * plant.C;
  const auto R_ldlt = weights.R.ldlt();

  KleinmanResult result;
  MatrixXd K = K0;
  for (int j = 0; j < max_iter; ++j) {
    const MatrixXd W = CQC + K.transpose() * weights.R * K;
    const MatrixXd P = lyapunov_solve(plant.A - plant.B * K, W);
    result.history.push_back({j, P, K});
    K = R_ldlt.solve(plant.B.transpose() * P);
    if (j > 0 && (P - result.history[j - 1].P).norm() < eps) {
      result.solution = {P, K, j + 1};
      return result;
    }
  }
  throw Error(ErrorKind::kNonConvergence,
              "solve_are_kleinman: no convergence within " +
                  std::to_string(max_iter) + " iterations");
}

Controller synthesize_controller(const MatrixXd& K,
                                 const RegulatorSolution& reg) {
  if (K.cols() != reg.X.rows() || K.rows() != reg.U.rows() ||
      reg.X.cols() != reg.U.cols()) {
    dim_error("synthesize_controller: K is " + shape(K) + ", X is " +
              shape(reg.X) + ", U is " + shape(reg.U));
  }
  return {K, reg.U + K * reg.X};
}

MatrixXd default_stabilizing_gain(const Plant& plant,
                                  const CostWeights& weights) {
  if (!is_hurwitz(plant.A)) {
    throw Error(ErrorKind::kNotHurwitz,
                "default_stabilizing_gain: only available for Hurwitz A");
  }
  const MatrixXd P =
      lyapunov_solve(plant.A, plant.C.transpose() * weights.Q * plant.C);
  return weights.R.ldlt().solve(plant.B.transpose() * P);
}

}  // namespace aoor
