#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "tpr/probes.hpp"

namespace tpr::analysis {

/// Per-(square, colour) readout directions implied by a TPR probe: row 3s+c
/// is M_flat^T vec(r_s f_c^T) (bilinear) or M_flat^T vec(u_i x v_j x f_c).
LinearProbe effective_linear_probe(const BilinearProbe& p);
LinearProbe effective_linear_probe(const TrilinearProbe& p);
LinearProbe effective_linear_probe(const Probe& p);

using SquareColorMatrix = Eigen::Matrix<double, 64, 3, Eigen::RowMajor>;

/// Cosine of corresponding rows after subtracting each square's mean over its
/// three colour rows. Throws ZeroVector, DimensionMismatch.
SquareColorMatrix mean_centered_cosine(const LinearProbe& a, const LinearProbe& b);

struct TruncatedSvd {
  LinearProbe probe;
  std::size_t params = 0;
  Eigen::VectorXd singular_values;  // all of them, non-increasing
  double frobenius_error = 0;
};

/// Best rank-k approximation of the 192 x d_model probe matrix.
TruncatedSvd truncated_svd_probe(const LinearProbe& p, int k);

enum class Relation { Neighbor, SameRow, SameColumn, SameDiagonal, Unrelated };
inline constexpr int kNumRelations = 5;
const char* to_string(Relation r);

/// Board relation of two distinct squares (positions 0..63), resolved with
/// precedence neighbor > row > column > diagonal > unrelated.
Relation classify_pair(int s, int t);

/// Number of squares adjacent to s: 3 at corners, 5 on edges, 8 inside.
int board_degree(int s);

struct KnnReport {
  std::array<int, kNumRelations> counts{};
  int total = 0;
  std::array<double, kNumRelations> fractions{};
};

/// For each square retrieve as many nearest other rows of R (cosine
/// distance) as it has board neighbours, and tally their relations.
KnnReport knn_neighbor_classification(const Eigen::MatrixXd& R);

struct GapSim {
  Eigen::Matrix<double, 8, 8> mean;  // (0,0) is NaN
  Eigen::Matrix<int, 8, 8> count;
};

GapSim gapsim(const Eigen::MatrixXd& R);

/// Fraction of variance of the 2016 pairwise cosines explained by their gap
/// group means. Throws DegenerateVariance.
double gapsim_r2(const Eigen::MatrixXd& R);

struct Pca {
  Eigen::MatrixXd coords;              // n x out_dims
  Eigen::MatrixXd components;          // d x out_dims, orthonormal columns
  Eigen::VectorXd variances;           // out_dims, non-increasing
  Eigen::VectorXd explained_variance;  // variances over total variance
};

Pca pca(const Eigen::MatrixXd& X, int out_dims);

struct Isomap {
  Eigen::MatrixXd coords;     // n x out_dims
  Eigen::MatrixXd geodesic;   // n x n shortest-path distances
  Eigen::VectorXd eigenvalues;  // leading MDS eigenvalues before clipping
  int clipped = 0;            // how many of them were negative and set to zero
};

/// Throws DisconnectedGraph.
Isomap isomap(const Eigen::MatrixXd& X, int k_neighbors, int out_dims);

struct GramReport {
  Eigen::MatrixXd gram;
  Eigen::VectorXd singular_values;
};

/// Throws ZeroRow.
GramReport gram_report(const Eigen::MatrixXd& emb);

/// row,col,value triplets; NaN written as NA.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);
std::string matrix_csv(const Eigen::MatrixXd& m);

}  // namespace tpr::analysis
