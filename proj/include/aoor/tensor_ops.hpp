#pragma once

#include <Eigen/Dense>

namespace aoor {

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kSymmetryTol = 1e-8;

inline Eigen::Index tri_size(Eigen::Index n) { return n * (n + 1) / 2; }

/// Half-vectorized image of a symmetric matrix or of a vector's pairwise
/// products. Entries enumerate the upper triangle row-major.
struct SymVec {
  Eigen::VectorXd entries;
  Eigen::Index dim = 0;

  SymVec() = default;
  SymVec(Eigen::VectorXd e, Eigen::Index n);
};

/// n^2 x n(n+1)/2 matrix M with M * vecs(P) = vec(P) for symmetric P.
struct DuplicationMatrix {
  Eigen::MatrixXd entries;
  Eigen::Index dim = 0;
};

struct LsqResult {
  Eigen::VectorXd solution;
  double residual_norm = 0.0;
  Eigen::Index numerical_rank = 0;
  double smallest_kept_singular_value = 0.0;
};

/// [b1^2, b1 b2, ..., b1 bn, b2^2, ..., bn^2]
SymVec vecv(const Eigen::Ref<const Eigen::VectorXd>& b, Eigen::Index n);
SymVec vecv(const Eigen::Ref<const Eigen::VectorXd>& b);

/// [p11, 2 p12, ..., 2 p1n, p22, ..., pnn]. The input is symmetrized first;
/// relative asymmetry above kSymmetryTol is rejected.
SymVec vecs(const Eigen::Ref<const Eigen::MatrixXd>& P);

/// Inverse of vecs: rebuilds the symmetric matrix.
Eigen::MatrixXd unvecs(const SymVec& s);
Eigen::MatrixXd unvecs(const Eigen::Ref<const Eigen::VectorXd>& entries,
                       Eigen::Index n);

/// Column stacking.
Eigen::VectorXd vec(const Eigen::Ref<const Eigen::MatrixXd>& A);

/// Column-major reshape of a vector into rows x cols.
Eigen::MatrixXd unvec(const Eigen::Ref<const Eigen::VectorXd>& v,
                      Eigen::Index rows, Eigen::Index cols);

/// Returns (v' P v, vecs(P) . vecv(v)).
std::pair<double, double> quad_form_identity_check(
    const Eigen::Ref<const Eigen::MatrixXd>& P,
    const Eigen::Ref<const Eigen::VectorXd>& v);

DuplicationMatrix duplication_matrix(Eigen::Index n);

Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

/// Minimum-norm least squares through the SVD. Singular values below
/// rank_tol * sigma_max are discarded.
LsqResult lsq_solve(const Eigen::Ref<const Eigen::MatrixXd>& A,
                    const Eigen::Ref<const Eigen::VectorXd>& b,
                    double rank_tol = kDefaultRankTol);

Eigen::Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& A,
                            double rank_tol = kDefaultRankTol);

/// Smallest singular value that still counts towards the numerical rank
/// (0 when the rank is 0).
double smallest_kept_singular_value(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    double rank_tol = kDefaultRankTol);

}  // namespace aoor
