#include "tpr/probes.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "tpr/errors.hpp"

namespace tpr {
namespace {

constexpr int kSquares = othello::kNumSquares;
constexpr int kColors = othello::kNumColors;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_input(int d_model, const Eigen::VectorXd& h) {
  if (h.size() != d_model) {
    throw DimensionMismatch("activation has length " + std::to_string(h.size()) +
                            ", probe expects " + std::to_string(d_model));
  }
}

void expect_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
}

// Softmax minus one-hot, divided by the batch size; also the mean loss.
Eigen::MatrixXd loss_residual(const Eigen::MatrixXd& logits, const std::vector<Labels>& labels,
                              double* loss_out) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd G(n, kNumReadouts);
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < kSquares; ++s) {
      const double m = std::max({logits(i, 3 * s), logits(i, 3 * s + 1), logits(i, 3 * s + 2)});
      double e[kColors];
      double z = 0;
      for (int c = 0; c < kColors; ++c) {
        e[c] = std::exp(logits(i, 3 * s + c) - m);
        z += e[c];
      }
      const int y = static_cast<int>(labels[i][s]);
      total += m + std::log(z) - logits(i, 3 * s + y);
      for (int c = 0; c < kColors; ++c) {
        G(i, 3 * s + c) = (e[c] / z - (c == y ? 1.0 : 0.0)) / static_cast<double>(n);
      }
    }
  }
  if (loss_out) *loss_out = total / static_cast<double>(n);
  return G;
}

void fill_normal(Eigen::MatrixXd& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
}

}  // namespace

const char* to_string(ProbeKind k) {
  switch (k) {
    case ProbeKind::Linear: return "linear";
    case ProbeKind::Bilinear: return "bilinear";
    case ProbeKind::Trilinear: return "trilinear";
  }
  return "?";
}

ProbeKind kind_of(const Probe& p) { return static_cast<ProbeKind>(p.index()); }

ProbeDims dims_of(const Probe& p) {
  return std::visit(overloaded{
                        [](const LinearProbe& q) {
                          return ProbeDims{ProbeKind::Linear, q.d_model()};
                        },
                        [](const BilinearProbe& q) {
                          return ProbeDims{ProbeKind::Bilinear, q.d_model(), q.d_r(), q.d_f()};
                        },
                        [](const TrilinearProbe& q) {
                          return ProbeDims{ProbeKind::Trilinear, q.d_model(), 0, q.d_f(), q.d_u(), q.d_v()};
                        },
                    },
                    p);
}

int d_model_of(const Probe& p) {
  return std::visit([](const auto& q) { return q.d_model(); }, p);
}

Probe init_probe(const ProbeDims& d, std::uint64_t seed, double stddev) {
  if (d.d_model < 1) throw std::invalid_argument("d_model must be positive");
  std::mt19937_64 rng(seed);
  switch (d.kind) {
    case ProbeKind::Linear: {
      LinearProbe p;
      p.W.resize(kNumReadouts, d.d_model);
      fill_normal(p.W, rng, stddev);
      return p;
    }
    case ProbeKind::Bilinear: {
      if (d.d_r < 1 || d.d_f < 1) throw std::invalid_argument("bilinear dims must be positive");
      BilinearProbe p;
      p.R.resize(kSquares, d.d_r);
      p.F.resize(kColors, d.d_f);
      p.M.resize(static_cast<Eigen::Index>(d.d_r) * d.d_f, d.d_model);
      fill_normal(p.R, rng, stddev);
      fill_normal(p.F, rng, stddev);
      fill_normal(p.M, rng, stddev);
      return p;
    }
    case ProbeKind::Trilinear: {
      if (d.d_u < 1 || d.d_v < 1 || d.d_f < 1) throw std::invalid_argument("trilinear dims must be positive");
      TrilinearProbe p;
      p.U.resize(8, d.d_u);
      p.V.resize(8, d.d_v);
      p.F.resize(kColors, d.d_f);
      p.M.resize(static_cast<Eigen::Index>(d.d_u) * d.d_v * d.d_f, d.d_model);
      fill_normal(p.U, rng, stddev);
      fill_normal(p.V, rng, stddev);
      fill_normal(p.F, rng, stddev);
      fill_normal(p.M, rng, stddev);
      return p;
    }
  }
  throw std::invalid_argument("unknown probe kind");
}

void validate(const Probe& p) {
  std::visit(overloaded{
                 [](const LinearProbe& q) { expect_shape(q.W, kNumReadouts, q.W.cols(), "W"); },
                 [](const BilinearProbe& q) {
                   expect_shape(q.R, kSquares, q.R.cols(), "R");
                   expect_shape(q.F, kColors, q.F.cols(), "F");
                   expect_shape(q.M, q.R.cols() * q.F.cols(), q.M.cols(), "M");
                 },
                 [](const TrilinearProbe& q) {
                   expect_shape(q.U, 8, q.U.cols(), "U");
                   expect_shape(q.V, 8, q.V.cols(), "V");
                   expect_shape(q.F, kColors, q.F.cols(), "F");
                   expect_shape(q.M, q.U.cols() * q.V.cols() * q.F.cols(), q.M.cols(), "M");
                 },
             },
             p);
  for (const Eigen::MatrixXd* m : parameters(p)) {
    if (m->size() == 0) throw DimensionMismatch("empty parameter tensor");
    if (!m->allFinite()) throw std::invalid_argument("non-finite probe parameter");
  }
}

Logits linear_forward(const LinearProbe& p, const Eigen::VectorXd& h) {
  check_input(p.d_model(), h);
  const Eigen::VectorXd flat = p.W * h;
  return Eigen::Map<const Logits>(flat.data());
}

Eigen::VectorXd bind(const BilinearProbe& p, const Eigen::VectorXd& h) {
  check_input(p.d_model(), h);
  return p.M * h;
}

Eigen::VectorXd bind(const TrilinearProbe& p, const Eigen::VectorXd& h) {
  check_input(p.d_model(), h);
  return p.M * h;
}

Logits bilinear_forward(const BilinearProbe& p, const Eigen::VectorXd& h) {
  const Eigen::VectorXd flat = bind(p, h);
  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajorMatrix> B(flat.data(), p.d_r(), p.d_f());
  return p.R * B * p.F.transpose();
}

Logits trilinear_forward(const TrilinearProbe& p, const Eigen::VectorXd& h) {
  const Eigen::VectorXd T = bind(p, h);
  const int du = p.d_u(), dv = p.d_v(), df = p.d_f();
  // Contract one mode at a time: first the filler axis, then columns, then rows.
  Logits out;
  for (int c = 0; c < kColors; ++c) {
    Eigen::MatrixXd Tc(du, dv);  // T contracted with f_c
    for (int a = 0; a < du; ++a)
      for (int b = 0; b < dv; ++b) {
        double acc = 0;
        for (int e = 0; e < df; ++e) acc += T((a * dv + b) * df + e) * p.F(c, e);
        Tc(a, b) = acc;
      }
    const Eigen::MatrixXd grid = p.U * Tc * p.V.transpose();  // 8 x 8, (row, col)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) out(8 * i + j, c) = grid(i, j);
  }
  return out;
}

Logits forward(const Probe& p, const Eigen::VectorXd& h) {
  return std::visit(overloaded{
                        [&](const LinearProbe& q) { return linear_forward(q, h); },
                        [&](const BilinearProbe& q) { return bilinear_forward(q, h); },
                        [&](const TrilinearProbe& q) { return trilinear_forward(q, h); },
                    },
                    p);
}

Eigen::MatrixXd unbinding_matrix(const BilinearProbe& p) {
  const int dr = p.d_r(), df = p.d_f();
  Eigen::MatrixXd K(dr * df, kNumReadouts);
  for (int s = 0; s < kSquares; ++s)
    for (int c = 0; c < kColors; ++c)
      for (int a = 0; a < dr; ++a)
        for (int b = 0; b < df; ++b) K(a * df + b, 3 * s + c) = p.R(s, a) * p.F(c, b);
  return K;
}

Eigen::MatrixXd unbinding_matrix(const TrilinearProbe& p) {
  const int du = p.d_u(), dv = p.d_v(), df = p.d_f();
  Eigen::MatrixXd K(du * dv * df, kNumReadouts);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int c = 0; c < kColors; ++c)
        for (int a = 0; a < du; ++a)
          for (int b = 0; b < dv; ++b) {
            const double uv = p.U(i, a) * p.V(j, b);
            for (int e = 0; e < df; ++e) K((a * dv + b) * df + e, 3 * (8 * i + j) + c) = uv * p.F(c, e);
          }
  return K;
}

double board_loss(const Logits& logits, const Labels& labels) {
  double total = 0;
  for (int s = 0; s < kSquares; ++s) {
    const double m = logits.row(s).maxCoeff();
    const double z = (logits.row(s).array() - m).exp().sum();
    total += m + std::log(z) - logits(s, static_cast<int>(labels[s]));
  }
  return total;
}

Labels predict(const Logits& logits) {
  Labels out;
  for (int s = 0; s < kSquares; ++s) {
    Eigen::Index c;
    logits.row(s).maxCoeff(&c);
    out[s] = static_cast<CellColor>(c);
  }
  return out;
}

Batch Batch::from_dataset(const Dataset& d, const std::vector<std::size_t>& rows) {
  Batch b;
  b.H.resize(static_cast<Eigen::Index>(rows.size()), d.d_model);
  b.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.H.row(static_cast<Eigen::Index>(i)) =
        d.activations.row(static_cast<Eigen::Index>(rows[i])).cast<double>();
    b.labels.push_back(d.labels[rows[i]]);
  }
  return b;
}

Batch Batch::from_dataset(const Dataset& d) {
  Batch b;
  b.H = d.activations.cast<double>();
  b.labels = d.labels;
  return b;
}

Eigen::MatrixXd batch_logits(const Probe& p, const Eigen::MatrixXd& H) {
  if (H.cols() != d_model_of(p)) {
    throw DimensionMismatch("batch has d_model " + std::to_string(H.cols()) + ", probe expects " +
                            std::to_string(d_model_of(p)));
  }
  return std::visit(overloaded{
                        [&](const LinearProbe& q) -> Eigen::MatrixXd { return H * q.W.transpose(); },
                        [&](const auto& q) -> Eigen::MatrixXd {
                          return (H * q.M.transpose()) * unbinding_matrix(q);
                        },
                    },
                    p);
}

double batch_loss(const Probe& p, const Batch& batch) {
  double loss = 0;
  loss_residual(batch_logits(p, batch.H), batch.labels, &loss);
  return loss;
}

LinearProbe gradients(const LinearProbe& p, const Batch& batch, double* loss_out) {
  const Eigen::MatrixXd G = loss_residual(batch_logits(p, batch.H), batch.labels, loss_out);
  return {G.transpose() * batch.H};
}

BilinearProbe gradients(const BilinearProbe& p, const Batch& batch, double* loss_out) {
  if (batch.H.cols() != p.d_model()) throw DimensionMismatch("batch d_model mismatch");
  const int dr = p.d_r(), df = p.d_f();
  const Eigen::MatrixXd K = unbinding_matrix(p);
  const Eigen::MatrixXd Bm = batch.H * p.M.transpose();  // n x (dr*df)
  const Eigen::MatrixXd G = loss_residual(Bm * K, batch.labels, loss_out);
  const Eigen::MatrixXd dK = Bm.transpose() * G;  // (dr*df) x 192

  BilinearProbe g;
  g.M = (G * K.transpose()).transpose() * batch.H;
  g.R = Eigen::MatrixXd::Zero(kSquares, dr);
  g.F = Eigen::MatrixXd::Zero(kColors, df);
  for (int s = 0; s < kSquares; ++s)
    for (int c = 0; c < kColors; ++c)
      for (int a = 0; a < dr; ++a)
        for (int b = 0; b < df; ++b) {
          const double v = dK(a * df + b, 3 * s + c);
          g.R(s, a) += v * p.F(c, b);
          g.F(c, b) += v * p.R(s, a);
        }
  return g;
}

TrilinearProbe gradients(const TrilinearProbe& p, const Batch& batch, double* loss_out) {
  if (batch.H.cols() != p.d_model()) throw DimensionMismatch("batch d_model mismatch");
  const int du = p.d_u(), dv = p.d_v(), df = p.d_f();
  const Eigen::MatrixXd K = unbinding_matrix(p);
  const Eigen::MatrixXd Tm = batch.H * p.M.transpose();
  const Eigen::MatrixXd G = loss_residual(Tm * K, batch.labels, loss_out);
  const Eigen::MatrixXd dK = Tm.transpose() * G;

  TrilinearProbe g;
  g.M = (G * K.transpose()).transpose() * batch.H;
  g.U = Eigen::MatrixXd::Zero(8, du);
  g.V = Eigen::MatrixXd::Zero(8, dv);
  g.F = Eigen::MatrixXd::Zero(kColors, df);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int c = 0; c < kColors; ++c)
        for (int a = 0; a < du; ++a)
          for (int b = 0; b < dv; ++b)
            for (int e = 0; e < df; ++e) {
              const double v = dK((a * dv + b) * df + e, 3 * (8 * i + j) + c);
              g.U(i, a) += v * p.V(j, b) * p.F(c, e);
              g.V(j, b) += v * p.U(i, a) * p.F(c, e);
              g.F(c, e) += v * p.U(i, a) * p.V(j, b);
            }
  return g;
}

Probe gradients(const Probe& p, const Batch& batch, double* loss_out) {
  return std::visit([&](const auto& q) -> Probe { return gradients(q, batch, loss_out); }, p);
}

std::vector<Eigen::MatrixXd*> parameters(Probe& p) {
  return std::visit(overloaded{
                        [](LinearProbe& q) { return std::vector<Eigen::MatrixXd*>{&q.W}; },
                        [](BilinearProbe& q) { return std::vector<Eigen::MatrixXd*>{&q.R, &q.F, &q.M}; },
                        [](TrilinearProbe& q) {
                          return std::vector<Eigen::MatrixXd*>{&q.U, &q.V, &q.F, &q.M};
                        },
                    },
                    p);
}

std::vector<const Eigen::MatrixXd*> parameters(const Probe& p) {
  auto mut = parameters(const_cast<Probe&>(p));
  return {mut.begin(), mut.end()};
}

std::size_t param_count(const ProbeDims& d) {
  const auto dm = static_cast<std::size_t>(d.d_model);
  switch (d.kind) {
    case ProbeKind::Linear: return kNumReadouts * dm;
    case ProbeKind::Bilinear:
      return 64 * std::size_t(d.d_r) + 3 * std::size_t(d.d_f) + std::size_t(d.d_r) * d.d_f * dm;
    case ProbeKind::Trilinear:
      return 8 * std::size_t(d.d_u) + 8 * std::size_t(d.d_v) + 3 * std::size_t(d.d_f) +
             std::size_t(d.d_u) * d.d_v * d.d_f * dm;
  }
  return 0;
}

std::size_t param_count(const Probe& p) {
  std::size_t n = 0;
  for (const Eigen::MatrixXd* m : parameters(p)) n += static_cast<std::size_t>(m->size());
  return n;
}

double accuracy(const Probe& p, const Dataset& test) {
  if (test.d_model != d_model_of(p)) throw DimensionMismatch("test set d_model mismatch");
  if (test.size() == 0) return 0.0;
  constexpr std::size_t kChunk = 1024;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < test.size(); start += kChunk) {
    const auto n = static_cast<Eigen::Index>(std::min(kChunk, test.size() - start));
    const Eigen::MatrixXd H =
        test.activations.middleRows(static_cast<Eigen::Index>(start), n).cast<double>();
    const Eigen::MatrixXd L = batch_logits(p, H);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Labels& y = test.labels[start + static_cast<std::size_t>(i)];
      for (int s = 0; s < kSquares; ++s) {
        Eigen::Index c;
        L.row(i).segment<3>(3 * s).maxCoeff(&c);
        correct += static_cast<CellColor>(c) == y[s];
      }
    }
  }
  return static_cast<double>(correct) / (static_cast<double>(test.size()) * kSquares);
}

void round_to_f32(Probe& p) {
  for (Eigen::MatrixXd* m : parameters(p)) *m = m->cast<float>().cast<double>();
}

bool same_parameters(const Probe& a, const Probe& b) {
  if (a.index() != b.index()) return false;
  const auto pa = parameters(a);
  const auto pb = parameters(b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->rows() != pb[i]->rows() || pa[i]->cols() != pb[i]->cols()) return false;
    if (*pa[i] != *pb[i]) return false;
  }
  return true;
}

}  // namespace tpr
