#pragma once

#include <Eigen/Dense>

namespace tpr::linalg {

/// Moore-Penrose pseudo-inverse by SVD. Singular values below
/// rel_cutoff * sigma_max are treated as zero.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& A, double rel_cutoff = 1e-10);

struct SymEigen {
  Eigen::VectorXd values;   // non-increasing
  Eigen::MatrixXd vectors;  // column i pairs with values(i)
};

/// Eigendecomposition of a symmetric matrix, sorted by decreasing
/// eigenvalue. Each eigenvector is signed so its largest-magnitude entry is
/// positive, which makes the output reproducible across runs.
SymEigen sym_eigen(const Eigen::MatrixXd& S);

/// Flip the sign of each column so its largest-magnitude entry is positive.
void canonical_signs(Eigen::MatrixXd& columns);

}  // namespace tpr::linalg
