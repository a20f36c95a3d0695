#include <doctest.h>

#include <cmath>
#include <random>

#include "probe_oracles.hpp"
#include "tpr/analysis.hpp"
#include "tpr/errors.hpp"

using namespace tpr;
using namespace tpr::analysis;

namespace {

Eigen::MatrixXd orthogonal(std::mt19937_64& rng, int n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_matrix(rng, n, n));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd board_coordinates(int d_r, double lift = 0.0) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(64, d_r);
  for (int s = 0; s < 64; ++s) {
    R(s, 0) = s / 8 - 3.5;
    R(s, 1) = s % 8 - 3.5;
    if (lift != 0.0) R(s, 2) = lift;
  }
  return R;
}

double relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

TEST_CASE("effective linear probe reproduces TPR logits") {
  std::mt19937_64 rng(1);
  const Probe bi = init_probe({ProbeKind::Bilinear, 10, 4, 2}, 3, 1.0);
  const Probe tri = init_probe({ProbeKind::Trilinear, 10, 0, 2, 3, 2}, 4, 1.0);
  for (const Probe* p : {&bi, &tri}) {
    const LinearProbe eff = effective_linear_probe(*p);
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd h = oracle::random_matrix(rng, 10, 1);
      CHECK(relative(linear_forward(eff, h), forward(*p, h)) < 1e-10);
      // and against the loop oracle, independent of the unbinding matrix
      CHECK(relative(linear_forward(eff, h), oracle::loop_logits(*p, h)) < 1e-10);
    }
  }
}

TEST_CASE("effective probe is invariant to the role gauge") {
  std::mt19937_64 rng(2);
  auto p = std::get<BilinearProbe>(init_probe({ProbeKind::Bilinear, 7, 5, 2}, 5, 1.0));
  const Eigen::MatrixXd Q = orthogonal(rng, 5);
  BilinearProbe g = p;
  g.R = p.R * Q;
  // B' = Q^T B keeps r_s'^T B' f_c = r_s^T B f_c
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 2; ++b) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(7);
      for (int a2 = 0; a2 < 5; ++a2) row += Q(a2, a) * p.M.row(a2 * 2 + b);
      g.M.row(a * 2 + b) = row;
    }
  CHECK(relative(effective_linear_probe(g).W, effective_linear_probe(p).W) < 1e-12);
}

TEST_CASE("full-dimensional effective probe is the reshaped linear probe") {
  std::mt19937_64 rng(3);
  BilinearProbe bi;
  bi.R = Eigen::MatrixXd::Identity(64, 64);
  bi.F = Eigen::MatrixXd::Identity(3, 3);
  bi.M = oracle::random_matrix(rng, 192, 12);
  CHECK(effective_linear_probe(bi).W == bi.M);
}

TEST_CASE("mean-centred cosine") {
  std::mt19937_64 rng(4);
  const LinearProbe a{oracle::random_matrix(rng, 192, 9)};
  const SquareColorMatrix same = mean_centered_cosine(a, a);
  CHECK((same.array() - 1.0).abs().maxCoeff() < 1e-12);

  LinearProbe shifted = a;
  for (int s = 0; s < 64; ++s) {
    const Eigen::RowVectorXd offset = oracle::random_matrix(rng, 1, 9) * 10.0;
    for (int c = 0; c < 3; ++c) shifted.W.row(3 * s + c) += offset;
  }
  CHECK((mean_centered_cosine(a, shifted).array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK((mean_centered_cosine(shifted, a).array() - 1.0).abs().maxCoeff() < 1e-10);

  const LinearProbe b{oracle::random_matrix(rng, 192, 9)};
  const SquareColorMatrix ab = mean_centered_cosine(a, b);
  // oracle for one entry
  Eigen::RowVectorXd x = a.W.row(3 * 5 + 1) - a.W.middleRows(15, 3).colwise().mean();
  Eigen::RowVectorXd y = b.W.row(3 * 5 + 1) - b.W.middleRows(15, 3).colwise().mean();
  CHECK(ab(5, 1) == doctest::Approx(x.dot(y) / x.norm() / y.norm()).epsilon(1e-12));

  LinearProbe flat = a;
  flat.W.middleRows(3 * 7, 3).rowwise() = Eigen::RowVectorXd::Ones(9);
  CHECK_THROWS_AS(mean_centered_cosine(flat, a), ZeroVector);
  CHECK_THROWS_AS(mean_centered_cosine(a, LinearProbe{Eigen::MatrixXd::Ones(192, 4)}), DimensionMismatch);
}

TEST_CASE("truncated SVD probe") {
  std::mt19937_64 rng(5);
  const LinearProbe p{oracle::random_matrix(rng, 192, 200)};
  const TruncatedSvd full = truncated_svd_probe(p, 192);
  CHECK(relative(full.probe.W, p.W) < 1e-5);

  const Eigen::VectorXd oracle_sv = Eigen::JacobiSVD<Eigen::MatrixXd>(p.W).singularValues();
  CHECK((full.singular_values - oracle_sv).norm() / oracle_sv.norm() < 1e-8);

  double prev = INFINITY;
  for (int k : {1, 5, 20, 60, 100, 150, 191, 192}) {
    const TruncatedSvd t = truncated_svd_probe(p, k);
    CHECK(t.frobenius_error <= prev + 1e-9);
    // Eckart-Young: error is the norm of the discarded singular values
    CHECK(t.frobenius_error == doctest::Approx(oracle_sv.tail(192 - k).norm()).epsilon(1e-6).scale(1.0));
    prev = t.frobenius_error;
  }

  // rank-5 matrix, k = rank
  const LinearProbe low{oracle::random_matrix(rng, 192, 5) * oracle::random_matrix(rng, 5, 30)};
  CHECK(relative(truncated_svd_probe(low, 5).probe.W, low.W) < 1e-5);

  CHECK(truncated_svd_probe(LinearProbe{Eigen::MatrixXd::Ones(192, 512)}, 80).params == 56'320);
  CHECK_THROWS_AS(truncated_svd_probe(p, 0), std::invalid_argument);
  CHECK_THROWS_AS(truncated_svd_probe(low, 31), std::invalid_argument);
}

TEST_CASE("board relations and degrees") {
  const auto sq = [](int r, int c) { return 8 * r + c; };
  CHECK(classify_pair(sq(3, 3), sq(3, 4)) == Relation::Neighbor);
  CHECK(classify_pair(sq(3, 3), sq(4, 4)) == Relation::Neighbor);
  CHECK(classify_pair(sq(3, 3), sq(3, 6)) == Relation::SameRow);
  CHECK(classify_pair(sq(0, 3), sq(6, 3)) == Relation::SameColumn);
  CHECK(classify_pair(sq(1, 1), sq(5, 5)) == Relation::SameDiagonal);
  CHECK(classify_pair(sq(1, 6), sq(6, 1)) == Relation::SameDiagonal);
  CHECK(classify_pair(sq(0, 0), sq(2, 1)) == Relation::Unrelated);
  int total = 0, corners = 0, edges = 0, interior = 0;
  for (int s = 0; s < 64; ++s) {
    int neighbours = 0;
    for (int t = 0; t < 64; ++t) neighbours += t != s && classify_pair(s, t) == Relation::Neighbor;
    CHECK(board_degree(s) == neighbours);
    total += board_degree(s);
    corners += board_degree(s) == 3;
    edges += board_degree(s) == 5;
    interior += board_degree(s) == 8;
  }
  CHECK(total == 420);
  CHECK(corners == 4);
  CHECK(edges == 24);
  CHECK(interior == 36);
}

TEST_CASE("knn neighbour classification") {
  std::mt19937_64 rng(6);
  const KnnReport r = knn_neighbor_classification(oracle::random_matrix(rng, 64, 12));
  CHECK(r.total == 420);
  int sum = 0;
  double fsum = 0;
  for (int i = 0; i < kNumRelations; ++i) {
    sum += r.counts[static_cast<std::size_t>(i)];
    fsum += r.fractions[static_cast<std::size_t>(i)];
  }
  CHECK(sum == 420);
  CHECK(fsum == doctest::Approx(1.0).epsilon(1e-12));

  // planar coordinates lifted by a constant axis: cosine distance then
  // orders squares by planar distance
  const KnnReport planar = knn_neighbor_classification(board_coordinates(6, 100.0));
  CHECK(planar.fractions[0] >= 0.9);

  double unrelated = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 r2(100 + static_cast<std::uint64_t>(seed));
    unrelated += knn_neighbor_classification(oracle::random_matrix(r2, 64, 16)).fractions[4];
  }
  CHECK(unrelated / 20 >= 0.4);
}

TEST_CASE("gapsim") {
  std::mt19937_64 rng(7);
  const GapSim g = gapsim(oracle::random_matrix(rng, 64, 5));
  CHECK(std::isnan(g.mean(0, 0)));
  CHECK(g.count(0, 0) == 0);
  int total = 0;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      int expect;
      if (a == 0 && b == 0) expect = 0;
      else if (a == 0) expect = 8 * (8 - b);
      else if (b == 0) expect = 8 * (8 - a);
      else expect = 2 * (8 - a) * (8 - b);
      CHECK(g.count(a, b) == expect);
      total += g.count(a, b);
    }
  CHECK(total == 2016);

  const GapSim ones = gapsim(Eigen::MatrixXd::Ones(64, 3));
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      if (a || b) CHECK(ones.mean(a, b) == doctest::Approx(1.0));

  const GapSim planar = gapsim(board_coordinates(4));
  for (int d = 2; d < 8; ++d) CHECK(planar.mean(d, 0) < planar.mean(d - 1, 0));
}

TEST_CASE("gapsim R squared") {
  // cos(r_s, r_t) = (cos(w di) + cos(w dj)) / 2 depends only on the gaps
  Eigen::MatrixXd R(64, 4);
  const double w = 0.7;
  for (int s = 0; s < 64; ++s) {
    R.row(s) << std::cos(w * (s / 8)), std::sin(w * (s / 8)), std::cos(w * (s % 8)), std::sin(w * (s % 8));
  }
  CHECK(gapsim_r2(R) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(gapsim_r2(Eigen::MatrixXd::Ones(64, 3)), DegenerateVariance);
  CHECK_THROWS_AS(gapsim_r2(Eigen::MatrixXd::Identity(64, 64)), DegenerateVariance);

  std::mt19937_64 rng(8);
  const double r2 = gapsim_r2(oracle::random_matrix(rng, 64, 52));
  CHECK(r2 >= 0.0);
  CHECK(r2 < 0.1);
}

TEST_CASE("pca") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd plane = oracle::random_matrix(rng, 40, 2) * oracle::random_matrix(rng, 2, 6);
  const Pca p = pca(plane, 2);
  CHECK(p.explained_variance.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(p.variances(0) >= p.variances(1));
  CHECK((p.components.transpose() * p.components - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);

  const Eigen::MatrixXd X = oracle::random_matrix(rng, 30, 5);
  const Pca a = pca(X, 3);
  const Pca b = pca(X * orthogonal(rng, 5), 3);
  CHECK((a.explained_variance - b.explained_variance).norm() < 1e-10);
  for (int i = 1; i < 3; ++i) CHECK(a.variances(i) <= a.variances(i - 1));

  // explained variance against the covariance eigenvalues
  const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C.transpose() * C / 29.0);
  CHECK(a.variances(0) == doctest::Approx(es.eigenvalues()(4)).epsilon(1e-10));
  CHECK(a.explained_variance(0) == doctest::Approx(es.eigenvalues()(4) / es.eigenvalues().sum()).epsilon(1e-10));
  CHECK_THROWS_AS(pca(X, 6), std::invalid_argument);
}

TEST_CASE("isomap") {
  std::mt19937_64 rng(10);
  // collinear points in shuffled order, embedded in 3-D
  std::vector<double> t(25);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (auto& x : t) x = u(rng);
  const Eigen::Vector3d dir(0.3, -0.5, 0.8);
  Eigen::MatrixXd X(25, 3);
  for (int i = 0; i < 25; ++i) X.row(i) = t[static_cast<std::size_t>(i)] * dir.transpose();
  const Isomap iso = isomap(X, 4, 1);
  const double sign = (iso.coords(0, 0) - iso.coords(1, 0)) * (t[0] - t[1]) > 0 ? 1.0 : -1.0;
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j)
      if (t[static_cast<std::size_t>(i)] < t[static_cast<std::size_t>(j)]) {
        CHECK(sign * iso.coords(i, 0) < sign * iso.coords(j, 0));
      }

  const Eigen::MatrixXd& D = iso.geodesic;
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j)
      for (int k = 0; k < 25; ++k) CHECK(D(i, j) <= D(i, k) + D(k, j) + 1e-12);

  const Isomap same = isomap(Eigen::MatrixXd::Constant(10, 4, 2.5), 3, 2);
  CHECK(same.coords.cwiseAbs().maxCoeff() < 1e-12);

  const Isomap board = isomap(board_coordinates(3), 8, 2);
  CHECK(board.coords.allFinite());
  CHECK(board.clipped == 0);

  Eigen::MatrixXd clusters = Eigen::MatrixXd::Zero(8, 2);
  for (int i = 0; i < 4; ++i) {
    clusters(i, 0) = i * 0.1;
    clusters(4 + i, 0) = 100 + i * 0.1;
  }
  CHECK_THROWS_AS(isomap(clusters, 2, 1), DisconnectedGraph);
}

TEST_CASE("gram report") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd Q = orthogonal(rng, 8);
  const GramReport g = gram_report(Q.topRows(5));
  CHECK((g.gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-6);
  for (Eigen::Index i = 0; i < g.singular_values.size(); ++i) CHECK(g.singular_values(i) == doctest::Approx(1.0));

  Eigen::MatrixXd dup = oracle::random_matrix(rng, 4, 6);
  dup.row(3) = dup.row(1) * 2.0;
  const GramReport d = gram_report(dup);
  CHECK(d.gram(1, 3) == doctest::Approx(1.0));
  CHECK(d.singular_values(3) < 1e-10);
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(d.singular_values(i) <= d.singular_values(i - 1));

  Eigen::MatrixXd zero = dup;
  zero.row(2).setZero();
  CHECK_THROWS_AS(gram_report(zero), ZeroRow);
}

TEST_CASE("matrix CSV") {
  Eigen::MatrixXd m(2, 2);
  m << 1.5, std::nan(""), -2, 0;
  CHECK(matrix_csv(m) == "row,col,value\n0,0,1.5\n0,1,NA\n1,0,-2\n1,1,0\n");
}
