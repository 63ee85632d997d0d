#pragma once

#include <vector>

#include <Eigen/Dense>

#include "aoor/tensor_ops.hpp"

namespace aoor {

/// Parametrization of every solution of C X + F = 0:
///   X = X[1] + sum_{i=2}^{h+1} alpha_i X[i],   X[0] = 0.
///
/// The kernel directions built from ker(C) are numbered 1..h in their
/// construction, but live at slots 2..h+1 here because slot 1 is the
/// particular solution.
struct BasisSet {
  std::vector<Eigen::MatrixXd> X;          // h + 2 matrices, each n x q
  Eigen::Index h = 0;                      // (n - p) q
  std::vector<Eigen::VectorXd> null_vectors;  // n - p orthonormal vectors

  Eigen::Index size() const { return static_cast<Eigen::Index>(X.size()); }
};

/// S(X_i) = X_i E - A X_i for i = 1..h+1 (slot 0 is always zero and omitted).
struct SylvesterImages {
  std::vector<Eigen::MatrixXd> S;
};

/// Orthonormal basis of ker(C). Throws when C is rank deficient.
std::vector<Eigen::VectorXd> null_basis_C(
    const Eigen::Ref<const Eigen::MatrixXd>& C,
    double rank_tol = kDefaultRankTol);

BasisSet build_basis(const Eigen::Ref<const Eigen::MatrixXd>& C,
                     const Eigen::Ref<const Eigen::MatrixXd>& F,
                     Eigen::Index q, double rank_tol = kDefaultRankTol);

Eigen::MatrixXd sylvester_map(const Eigen::Ref<const Eigen::MatrixXd>& A,
                              const Eigen::Ref<const Eigen::MatrixXd>& E,
                              const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Ground-truth images for slots 1..h+1 (used only for checking).
SylvesterImages sylvester_images(const BasisSet& basis,
                                 const Eigen::Ref<const Eigen::MatrixXd>& A,
                                 const Eigen::Ref<const Eigen::MatrixXd>& E);

/// Expresses a solution of C X + F = 0 in the basis; returns alpha (length h)
/// and writes the reconstruction residual.
Eigen::VectorXd basis_coordinates(const BasisSet& basis,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  double* residual = nullptr);

}  // namespace aoor
