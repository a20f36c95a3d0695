#include "tpr/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace tpr::linalg {

Eigen::MatrixXd pinv(const Eigen::MatrixXd& A, double rel_cutoff) {
  if (A.size() == 0) return Eigen::MatrixXd::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = rel_cutoff * (sv.size() ? sv(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void canonical_signs(Eigen::MatrixXd& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index at = 0;
    columns.col(j).cwiseAbs().maxCoeff(&at);
    if (columns(at, j) < 0) columns.col(j) *= -1.0;
  }
}

SymEigen sym_eigen(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::Index n = S.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return es.eigenvalues()(a) > es.eigenvalues()(b); });
  SymEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
  }
  canonical_signs(out.vectors);
  return out;
}

}  // namespace tpr::linalg
