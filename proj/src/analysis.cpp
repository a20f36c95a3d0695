#include "tpr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "tpr/errors.hpp"
#include "tpr/linalg.hpp"
#include "tpr/parallel.hpp"

namespace tpr::analysis {
namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return a.dot(b) / (na * nb);
}

// All 2016 unordered pairs of distinct squares, in (s < t) order.
template <typename Fn>
void for_each_pair(Fn&& fn) {
  for (int s = 0; s < 64; ++s)
    for (int t = s + 1; t < 64; ++t) fn(s, t);
}

void check_role_matrix(const Eigen::MatrixXd& R) {
  if (R.rows() != 64) throw DimensionMismatch("role matrix must have 64 rows");
}

}  // namespace

LinearProbe effective_linear_probe(const BilinearProbe& p) {
  validate(p);
  return LinearProbe{unbinding_matrix(p).transpose() * p.M};
}

LinearProbe effective_linear_probe(const TrilinearProbe& p) {
  validate(p);
  return LinearProbe{unbinding_matrix(p).transpose() * p.M};
}

LinearProbe effective_linear_probe(const Probe& p) {
  return std::visit(
      [](const auto& q) -> LinearProbe {
        if constexpr (std::is_same_v<std::decay_t<decltype(q)>, LinearProbe>) {
          return q;
        } else {
          return effective_linear_probe(q);
        }
      },
      p);
}

SquareColorMatrix mean_centered_cosine(const LinearProbe& a, const LinearProbe& b) {
  validate(a);
  validate(b);
  if (a.d_model() != b.d_model()) throw DimensionMismatch("probes differ in d_model");
  SquareColorMatrix out;
  for (int s = 0; s < 64; ++s) {
    const Eigen::MatrixXd A = a.W.middleRows(3 * s, 3);
    const Eigen::MatrixXd B = b.W.middleRows(3 * s, 3);
    const Eigen::RowVectorXd ma = A.colwise().mean(), mb = B.colwise().mean();
    for (int c = 0; c < 3; ++c) {
      const Eigen::RowVectorXd x = A.row(c) - ma, y = B.row(c) - mb;
      const double nx = x.norm(), ny = y.norm();
      if (nx < 1e-12 || ny < 1e-12) {
        throw ZeroVector("mean-centred row of square " + std::to_string(s) + " has zero norm");
      }
      out(s, c) = x.dot(y) / (nx * ny);
    }
  }
  return out;
}

TruncatedSvd truncated_svd_probe(const LinearProbe& p, int k) {
  validate(p);
  const int max_k = std::min(kNumReadouts, p.d_model());
  if (k < 1 || k > max_k) {
    throw std::invalid_argument("k must lie in [1, " + std::to_string(max_k) + "]");
  }
  const Eigen::MatrixXd& W = p.W;
  const linalg::SymEigen eg = linalg::sym_eigen(W * W.transpose());
  const Eigen::MatrixXd Uk = eg.vectors.leftCols(k);
  TruncatedSvd out;
  out.probe.W = Uk * (Uk.transpose() * W);
  out.params = static_cast<std::size_t>(k) * static_cast<std::size_t>(kNumReadouts + p.d_model());
  out.singular_values = eg.values.cwiseMax(0.0).cwiseSqrt();
  out.frobenius_error = (W - out.probe.W).norm();
  return out;
}

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Neighbor: return "neighbor";
    case Relation::SameRow: return "row";
    case Relation::SameColumn: return "column";
    case Relation::SameDiagonal: return "diagonal";
    case Relation::Unrelated: return "unrelated";
  }
  return "?";
}

Relation classify_pair(int s, int t) {
  const int di = std::abs(s / 8 - t / 8), dj = std::abs(s % 8 - t % 8);
  if (std::max(di, dj) == 1) return Relation::Neighbor;
  if (di == 0) return Relation::SameRow;
  if (dj == 0) return Relation::SameColumn;
  if (di == dj) return Relation::SameDiagonal;
  return Relation::Unrelated;
}

int board_degree(int s) {
  const bool row_edge = s / 8 == 0 || s / 8 == 7;
  const bool col_edge = s % 8 == 0 || s % 8 == 7;
  if (row_edge && col_edge) return 3;
  if (row_edge || col_edge) return 5;
  return 8;
}

KnnReport knn_neighbor_classification(const Eigen::MatrixXd& R) {
  check_role_matrix(R);
  KnnReport rep;
  for (int s = 0; s < 64; ++s) {
    std::vector<std::pair<double, int>> dist;
    for (int t = 0; t < 64; ++t) {
      if (t != s) dist.emplace_back(1.0 - cosine(R.row(s).transpose(), R.row(t).transpose()), t);
    }
    const int k = board_degree(s);
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int n = 0; n < k; ++n) {
      ++rep.counts[static_cast<std::size_t>(classify_pair(s, dist[static_cast<std::size_t>(n)].second))];
      ++rep.total;
    }
  }
  for (int r = 0; r < kNumRelations; ++r) {
    rep.fractions[static_cast<std::size_t>(r)] =
        static_cast<double>(rep.counts[static_cast<std::size_t>(r)]) / rep.total;
  }
  return rep;
}

GapSim gapsim(const Eigen::MatrixXd& R) {
  check_role_matrix(R);
  GapSim g;
  g.mean.setZero();
  g.count.setZero();
  for_each_pair([&](int s, int t) {
    const int di = std::abs(s / 8 - t / 8), dj = std::abs(s % 8 - t % 8);
    g.mean(di, dj) += cosine(R.row(s).transpose(), R.row(t).transpose());
    ++g.count(di, dj);
  });
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      g.mean(i, j) = g.count(i, j) ? g.mean(i, j) / g.count(i, j) : std::numeric_limits<double>::quiet_NaN();
    }
  return g;
}

double gapsim_r2(const Eigen::MatrixXd& R) {
  const GapSim g = gapsim(R);
  std::vector<double> sims, preds;
  for_each_pair([&](int s, int t) {
    sims.push_back(cosine(R.row(s).transpose(), R.row(t).transpose()));
    preds.push_back(g.mean(std::abs(s / 8 - t / 8), std::abs(s % 8 - t % 8)));
  });
  const double mean = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    ss_tot += (sims[i] - mean) * (sims[i] - mean);
    ss_res += (sims[i] - preds[i]) * (sims[i] - preds[i]);
  }
  if (ss_tot < 1e-12) throw DegenerateVariance("pairwise cosines have no variance");
  return 1.0 - ss_res / ss_tot;
}

Pca pca(const Eigen::MatrixXd& X, int out_dims) {
  if (out_dims < 1 || out_dims > std::min(X.rows(), X.cols())) {
    throw std::invalid_argument("out_dims must lie in [1, min(n, d)]");
  }
  const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd var = svd.singularValues().cwiseAbs2() / static_cast<double>(std::max<Eigen::Index>(1, X.rows() - 1));
  const double total = var.sum();

  Pca out;
  out.components = svd.matrixV().leftCols(out_dims);
  linalg::canonical_signs(out.components);
  out.coords = C * out.components;
  out.variances = var.head(out_dims);
  out.explained_variance = total > 0 ? Eigen::VectorXd(out.variances / total) : Eigen::VectorXd::Zero(out_dims);
  return out;
}

Isomap isomap(const Eigen::MatrixXd& X, int k_neighbors, int out_dims) {
  const Eigen::Index n = X.rows();
  if (k_neighbors < 1 || out_dims < 1 || out_dims > n) {
    throw std::invalid_argument("isomap needs k_neighbors >= 1 and 1 <= out_dims <= n");
  }
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd euclid(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) euclid(i, j) = (X.row(i) - X.row(j)).norm();

  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n, n, inf);
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, i) = 0;
    std::vector<std::pair<double, Eigen::Index>> nb;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) nb.emplace_back(euclid(i, j), j);
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), nb.size());
    std::partial_sort(nb.begin(), nb.begin() + static_cast<std::ptrdiff_t>(k), nb.end());
    for (std::size_t m = 0; m < k; ++m) {
      D(i, nb[m].second) = nb[m].first;
      D(nb[m].second, i) = nb[m].first;
    }
  }
  // Floyd-Warshall; each k-round updates rows independently
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXd dk = D.col(k);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      if (dk(i) == inf) return;
      for (Eigen::Index j = 0; j < n; ++j) D(i, j) = std::min(D(i, j), dk(i) + dk(j));
    });
  }
  if (!D.allFinite()) throw DisconnectedGraph("k-nearest-neighbour graph is disconnected");

  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::MatrixXd B = -0.5 * J * D.cwiseAbs2() * J;
  B = 0.5 * (B + B.transpose());
  const linalg::SymEigen eg = linalg::sym_eigen(B);

  Isomap out;
  out.geodesic = D;
  out.eigenvalues = eg.values.head(out_dims);
  out.coords.resize(n, out_dims);
  for (int c = 0; c < out_dims; ++c) {
    double lambda = eg.values(c);
    if (lambda < 0) {
      ++out.clipped;
      lambda = 0;
    }
    out.coords.col(c) = eg.vectors.col(c) * std::sqrt(lambda);
  }
  return out;
}

GramReport gram_report(const Eigen::MatrixXd& emb) {
  Eigen::MatrixXd normed = emb;
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    const double nrm = emb.row(i).norm();
    if (nrm < 1e-12) throw ZeroRow("embedding row " + std::to_string(i) + " is zero");
    normed.row(i) /= nrm;
  }
  GramReport out;
  out.gram = normed * normed.transpose();
  out.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(emb).singularValues();
  return out;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  std::ostringstream body;
  body.precision(17);
  body << "row,col,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      body << i << ',' << j << ',';
      if (std::isnan(m(i, j))) {
        body << "NA";
      } else {
        body << m(i, j);
      }
      body << '\n';
    }
  os << body.str();
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  write_matrix_csv(os, m);
  return os.str();
}

}  // namespace tpr::analysis
