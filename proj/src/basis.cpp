#include "aoor/basis.hpp"

#include <string>

#include "aoor/error.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<VectorXd> null_basis_C(const Eigen::Ref<const MatrixXd>& C,
                                   double rank_tol) {
  const Index p = C.rows(), n = C.cols();
  if (p > n || numerical_rank(C, rank_tol) != p) {
    throw Error(ErrorKind::kRankDeficient, "null_basis_C: C must have full row rank");
  }
  Eigen::JacobiSVD<MatrixXd> svd(C, Eigen::ComputeFullV);
  std::vector<VectorXd> out;
  for (Index k = p; k < n; ++k) {
    VectorXd y = svd.matrixV().col(k);
    // Sign convention: first nonzero entry positive.
    for (Index r = 0; r < n; ++r) {
      if (std::abs(y(r)) > 1e-12) {
        if (y(r) < 0) y = -y;
        break;
      }
    }
    out.push_back(std::move(y));
  }
  return out;
}

BasisSet build_basis(const Eigen::Ref<const MatrixXd>& C,
                     const Eigen::Ref<const MatrixXd>& F, Index q,
                     double rank_tol) {
  const Index p = C.rows(), n = C.cols();
  if (F.rows() != p || F.cols() != q) {
    throw Error(ErrorKind::kDimension, "build_basis: F must be p x q");
  }
  BasisSet basis;
  basis.null_vectors = null_basis_C(C, rank_tol);
  basis.h = (n - p) * q;

  basis.X.reserve(static_cast<std::size_t>(basis.h + 2));
  basis.X.push_back(MatrixXd::Zero(n, q));

  // Minimum-norm particular solution of C X1 = -F, one column at a time.
  MatrixXd X1(n, q);
  for (Index c = 0; c < q; ++c) {
    const LsqResult col = lsq_solve(C, -F.col(c), rank_tol);
    if (col.residual_norm > 1e-10 * (1.0 + F.col(c).norm())) {
      throw Error(ErrorKind::kInconsistent, "build_basis: C X + F = 0 has no solution");
    }
    X1.col(c) = col.solution;
  }
  basis.X.push_back(std::move(X1));

  for (Index k = 0; k < q; ++k) {
    for (const VectorXd& y : basis.null_vectors) {
      MatrixXd Xi = MatrixXd::Zero(n, q);
      Xi.col(k) = y;
      basis.X.push_back(std::move(Xi));
    }
  }
  return basis;
}

MatrixXd sylvester_map(const Eigen::Ref<const MatrixXd>& A,
                       const Eigen::Ref<const MatrixXd>& E,
                       const Eigen::Ref<const MatrixXd>& X) {
  if (A.rows() != A.cols() || E.rows() != E.cols() || X.rows() != A.rows() ||
      X.cols() != E.rows()) {
    throw Error(ErrorKind::kDimension, "sylvester_map: shape mismatch");
  }
  return X * E - A * X;
}

SylvesterImages sylvester_images(const BasisSet& basis,
                                 const Eigen::Ref<const MatrixXd>& A,
                                 const Eigen::Ref<const MatrixXd>& E) {
  SylvesterImages out;
  for (std::size_t i = 1; i < basis.X.size(); ++i) {
    out.S.push_back(sylvester_map(A, E, basis.X[i]));
  }
  return out;
}

VectorXd basis_coordinates(const BasisSet& basis,
                           const Eigen::Ref<const MatrixXd>& X,
                           double* residual) {
  const VectorXd target = vec(X - basis.X[1]);
  if (basis.h == 0) {
    if (residual) *residual = target.norm();
    return VectorXd(0);
  }
  MatrixXd G(target.size(), basis.h);
  for (Index i = 0; i < basis.h; ++i) G.col(i) = vec(basis.X[2 + i]);
  const LsqResult fit = lsq_solve(G, target);
  if (residual) *residual = fit.residual_norm;
  return fit.solution;
}

}  // namespace aoor
