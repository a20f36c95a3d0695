#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tpr/encodings.hpp"

namespace tpr {

inline constexpr int kNumReadouts = othello::kNumSquares * othello::kNumColors;  // 192

/// Per-square logits, row s = square pos, column c = CellColor value.
using Logits = Eigen::Matrix<double, othello::kNumSquares, othello::kNumColors, Eigen::RowMajor>;

/// One 3 x d_model readout per square, stacked: row 3*s + c is w_{s,c}.
struct LinearProbe {
  Eigen::MatrixXd W;

  int d_model() const { return static_cast<int>(W.cols()); }
};

/// Role matrix R (64 x d_r), filler matrix F (3 x d_f) and binding map M
/// stored flattened as (d_r*d_f) x d_model with row index a*d_f + b, which is
/// the row-major vec of the d_r x d_f binding matrix.
struct BilinearProbe {
  Eigen::MatrixXd R;
  Eigen::MatrixXd F;
  Eigen::MatrixXd M;

  int d_r() const { return static_cast<int>(R.cols()); }
  int d_f() const { return static_cast<int>(F.cols()); }
  int d_model() const { return static_cast<int>(M.cols()); }
};

/// Row embeddings U (8 x d_u), column embeddings V (8 x d_v), fillers F and
/// binding map M flattened to (d_u*d_v*d_f) x d_model, row (a*d_v + b)*d_f + e.
struct TrilinearProbe {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::MatrixXd F;
  Eigen::MatrixXd M;

  int d_u() const { return static_cast<int>(U.cols()); }
  int d_v() const { return static_cast<int>(V.cols()); }
  int d_f() const { return static_cast<int>(F.cols()); }
  int d_model() const { return static_cast<int>(M.cols()); }
};

using Probe = std::variant<LinearProbe, BilinearProbe, TrilinearProbe>;

enum class ProbeKind { Linear, Bilinear, Trilinear };

const char* to_string(ProbeKind k);
ProbeKind kind_of(const Probe& p);

struct ProbeDims {
  ProbeKind kind = ProbeKind::Linear;
  int d_model = 0;
  int d_r = 0;
  int d_f = 0;
  int d_u = 0;
  int d_v = 0;
};

ProbeDims dims_of(const Probe& p);
int d_model_of(const Probe& p);

/// All tensors i.i.d. normal with standard deviation `stddev`.
Probe init_probe(const ProbeDims& dims, std::uint64_t seed, double stddev = 0.02);

/// Throws DimensionMismatch unless every tensor has the shape implied by the
/// others, and std::invalid_argument on non-finite entries.
void validate(const Probe& p);

Logits linear_forward(const LinearProbe& p, const Eigen::VectorXd& h);
/// B = M(h), logits[s][c] = r_s^T B f_c.
Logits bilinear_forward(const BilinearProbe& p, const Eigen::VectorXd& h);
/// T = M(h), logits[(i,j)][c] = <T, u_i x v_j x f_c>.
Logits trilinear_forward(const TrilinearProbe& p, const Eigen::VectorXd& h);
Logits forward(const Probe& p, const Eigen::VectorXd& h);

/// Binding-space coordinates of h: the flattened B (bilinear) or T (trilinear).
Eigen::VectorXd bind(const BilinearProbe& p, const Eigen::VectorXd& h);
Eigen::VectorXd bind(const TrilinearProbe& p, const Eigen::VectorXd& h);

/// K with K(k, 3s+c) = vec(r_s f_c^T)_k (bilinear) or vec(u_i x v_j x f_c)_k
/// (trilinear); logits are bind(h)^T K.
Eigen::MatrixXd unbinding_matrix(const BilinearProbe& p);
Eigen::MatrixXd unbinding_matrix(const TrilinearProbe& p);

/// Sum over squares of softmax cross-entropy.
double board_loss(const Logits& logits, const Labels& labels);

/// Predicted colour per square (ties resolve to the lower colour value).
Labels predict(const Logits& logits);

struct Batch {
  Eigen::MatrixXd H;  // n x d_model
  std::vector<Labels> labels;

  std::size_t size() const { return labels.size(); }
  static Batch from_dataset(const Dataset& d, const std::vector<std::size_t>& rows);
  static Batch from_dataset(const Dataset& d);
};

/// n x 192 logits for every row of H.
Eigen::MatrixXd batch_logits(const Probe& p, const Eigen::MatrixXd& H);

/// Mean board_loss over the batch.
double batch_loss(const Probe& p, const Batch& batch);

/// Gradient of batch_loss with respect to every tensor, returned with the
/// same shape as the probe. `loss_out` receives the batch loss if non-null.
LinearProbe gradients(const LinearProbe& p, const Batch& batch, double* loss_out = nullptr);
BilinearProbe gradients(const BilinearProbe& p, const Batch& batch, double* loss_out = nullptr);
TrilinearProbe gradients(const TrilinearProbe& p, const Batch& batch, double* loss_out = nullptr);
Probe gradients(const Probe& p, const Batch& batch, double* loss_out = nullptr);

/// Pointers to the parameter tensors in checkpoint order (W | R,F,M | U,V,F,M).
std::vector<Eigen::MatrixXd*> parameters(Probe& p);
std::vector<const Eigen::MatrixXd*> parameters(const Probe& p);

std::size_t param_count(const Probe& p);
std::size_t param_count(const ProbeDims& dims);

/// Mean over samples and squares of argmax agreement with the labels.
double accuracy(const Probe& p, const Dataset& test);

/// Rounds every parameter to the nearest float, the checkpoint precision.
void round_to_f32(Probe& p);

bool same_parameters(const Probe& a, const Probe& b);

// .tprpb checkpoint: JSON header line, then the parameter tensors as f32le,
// row-major, in parameters() order. Throws FormatError.
void save_probe(std::ostream& os, const Probe& p);
void save_probe(const std::string& path, const Probe& p);
Probe load_probe(std::istream& is);
Probe load_probe(const std::string& path);

struct TrainConfig {
  double lr = 1e-2;
  double weight_decay = 1e-2;
  int batch_size = 128;
  int epochs = 1;
  int patience = 10;
  int validate_every = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Validation {
  int step = 0;
  double loss = 0;
  double accuracy = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<Validation> validations;
  int steps = 0;
  int best_step = 0;
  double best_val_loss = 0;
  bool early_stopped = false;
};

struct TrainResult {
  Probe probe;
  TrainHistory history;
};

/// AdamW over shuffled mini-batches with validation-loss early stopping.
/// Returns the best validation checkpoint, rounded to f32. Deterministic in
/// cfg.seed. Throws DimensionMismatch.
TrainResult train(const Probe& init, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg);

}  // namespace tpr
