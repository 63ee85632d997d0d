#include "aoor/tensor_ops.hpp"

#include <string>

#include "aoor/error.hpp"

namespace aoor {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

SymVec::SymVec(VectorXd e, Index n) : entries(std::move(e)), dim(n) {
  if (n < 0 || entries.size() != tri_size(n)) {
    throw Error(ErrorKind::kDimension,
                "SymVec of dim " + std::to_string(n) + " needs " +
                    std::to_string(tri_size(n)) + " entries, got " +
                    std::to_string(entries.size()));
  }
}

SymVec vecv(const Eigen::Ref<const VectorXd>& b, Index n) {
  if (n < 1 || b.size() != n) {
    throw Error(ErrorKind::kDimension,
                "vecv: expected length " + std::to_string(n) + ", got " +
                    std::to_string(b.size()));
  }
  VectorXd out(tri_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) out(k++) = b(i) * b(j);
  }
  return SymVec(std::move(out), n);
}

SymVec vecv(const Eigen::Ref<const VectorXd>& b) { return vecv(b, b.size()); }

SymVec vecs(const Eigen::Ref<const MatrixXd>& P) {
  if (P.rows() != P.cols()) {
    throw Error(ErrorKind::kDimension, "vecs: matrix is not square");
  }
  const Index n = P.rows();
  const double scale = P.norm();
  if (scale > 0.0 && (P - P.transpose()).norm() > kSymmetryTol * scale) {
    throw Error(ErrorKind::kAsymmetric, "vecs: matrix is not symmetric");
  }
  const MatrixXd S = 0.5 * (P + P.transpose());
  VectorXd out(tri_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) out(k++) = (i == j) ? S(i, j) : 2.0 * S(i, j);
  }
  return SymVec(std::move(out), n);
}

MatrixXd unvecs(const Eigen::Ref<const VectorXd>& entries, Index n) {
  if (entries.size() != tri_size(n)) {
    throw Error(ErrorKind::kDimension, "unvecs: wrong entry count");
  }
  MatrixXd P(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double value = (i == j) ? entries(k) : 0.5 * entries(k);
      P(i, j) = value;
      P(j, i) = value;
      ++k;
    }
  }
  return P;
}

MatrixXd unvecs(const SymVec& s) { return unvecs(s.entries, s.dim); }

VectorXd vec(const Eigen::Ref<const MatrixXd>& A) {
  VectorXd out(A.size());
  Index k = 0;
  for (Index c = 0; c < A.cols(); ++c) {
    for (Index r = 0; r < A.rows(); ++r) out(k++) = A(r, c);
  }
  return out;
}

MatrixXd unvec(const Eigen::Ref<const VectorXd>& v, Index rows, Index cols) {
  if (v.size() != rows * cols) {
    throw Error(ErrorKind::kDimension, "unvec: size does not match shape");
  }
  MatrixXd out(rows, cols);
  Index k = 0;
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) out(r, c) = v(k++);
  }
  return out;
}

std::pair<double, double> quad_form_identity_check(
    const Eigen::Ref<const MatrixXd>& P, const Eigen::Ref<const VectorXd>& v) {
  if (P.rows() != v.size() || P.cols() != v.size()) {
    throw Error(ErrorKind::kDimension, "quad_form_identity_check: dims");
  }
  const double direct = v.dot(P * v);
  const double vectorized = vecs(P).entries.dot(vecv(v).entries);
  return {direct, vectorized};
}

DuplicationMatrix duplication_matrix(Index n) {
  if (n < 1) throw Error(ErrorKind::kDimension, "duplication_matrix: n < 1");
  MatrixXd M = MatrixXd::Zero(n * n, tri_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      if (i == j) {
        M(i + j * n, k) = 1.0;
      } else {
        // vecs doubles the off-diagonal entry, so each of the two mirrored
        // positions gets half of it back.
        M(i + j * n, k) = 0.5;
        M(j + i * n, k) = 0.5;
      }
      ++k;
    }
  }
  return {std::move(M), n};
}

MatrixXd kron(const Eigen::Ref<const MatrixXd>& A,
              const Eigen::Ref<const MatrixXd>& B) {
  MatrixXd out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return out;
}

namespace {

Index count_kept(const VectorXd& sv, double rank_tol) {
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cutoff = rank_tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) >= cutoff) ++r;
  return r;
}

}  // namespace

LsqResult lsq_solve(const Eigen::Ref<const MatrixXd>& A,
                    const Eigen::Ref<const VectorXd>& b, double rank_tol) {
  if (A.rows() == 0 || A.cols() == 0) {
    throw Error(ErrorKind::kDimension, "lsq_solve: empty matrix");
  }
  if (A.rows() != b.size()) {
    throw Error(ErrorKind::kDimension,
                "lsq_solve: " + std::to_string(A.rows()) + " rows but rhs of " +
                    std::to_string(b.size()));
  }
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const Index r = count_kept(sv, rank_tol);

  LsqResult out;
  out.numerical_rank = r;
  out.smallest_kept_singular_value = r > 0 ? sv(r - 1) : 0.0;
  out.solution = VectorXd::Zero(A.cols());
  if (r > 0) {
    const VectorXd coeffs =
        (svd.matrixU().leftCols(r).transpose() * b).cwiseQuotient(sv.head(r));
    out.solution = svd.matrixV().leftCols(r) * coeffs;
  }
  out.residual_norm = (A * out.solution - b).norm();
  return out;
}

Index numerical_rank(const Eigen::Ref<const MatrixXd>& A, double rank_tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  return count_kept(svd.singularValues(), rank_tol);
}

double smallest_kept_singular_value(const Eigen::Ref<const MatrixXd>& A,
                                    double rank_tol) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  const Index r = count_kept(svd.singularValues(), rank_tol);
  return r > 0 ? svd.singularValues()(r - 1) : 0.0;
}

}  // namespace aoor
