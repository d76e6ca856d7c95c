#pragma once

#include <Eigen/Core>
#include <cstddef>

namespace ldon {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct SymEigResult {
  Vector eigenvalues;   ///< sorted descending
  Matrix eigenvectors;  ///< column i pairs with eigenvalues[i]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops when the
/// off-diagonal Frobenius norm drops below 1e-12 * ||A||_F (max 100 sweeps).
/// Rejects matrices that are asymmetric beyond 1e-12 (relative to max |a_ij|)
/// or larger than 4096.
SymEigResult sym_eig(const Matrix& a);

struct SvdResult {
  Matrix u;  ///< N x k
  Vector s;  ///< k, descending
  Matrix v;  ///< D x k
};

/// Rank-k SVD of an N x D matrix via sym_eig of the smaller Gram matrix.
SvdResult truncated_svd(const Matrix& x, std::size_t k);

}  // namespace ldon
