#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tpr/encodings.hpp"
#include "tpr/othello.hpp"
#include "tpr/probes.hpp"

namespace tpr::interventions {

using othello::Square;
using MoveSet = othello::SquareSet;

/// Squares whose softmax probability over all 64 logits exceeds 0.01.
MoveSet moves_from_logits(const Eigen::VectorXd& logits, double threshold = 0.01);

/// False positives plus false negatives.
inline int error_count(MoveSet a, MoveSet b) { return MoveSet(a.bits() ^ b.bits()).size(); }

/// h + alpha * w_{s,c} / |w_{s,c}|. Throws ZeroDirection.
Eigen::VectorXd linear_intervene(const Eigen::VectorXd& h, const LinearProbe& p, Square s, CellColor c,
                                 double alpha);

/// Binding-space change for moving square s from colour y to y_hat:
/// vec(r_s (f_yhat - f_y)^T) or vec(u_i x v_j x (f_yhat - f_y)).
Eigen::VectorXd binding_delta(const BilinearProbe& p, Square s, CellColor y, CellColor y_hat);
Eigen::VectorXd binding_delta(const TrilinearProbe& p, Square s, CellColor y, CellColor y_hat);

/// z = M_flat^+ delta, h + alpha * z / |z|. Throws ZeroDirection.
Eigen::VectorXd tpr_intervene(const Eigen::VectorXd& h, const BilinearProbe& p, Square s, CellColor y,
                              CellColor y_hat, double alpha);
Eigen::VectorXd trilinear_intervene(const Eigen::VectorXd& h, const TrilinearProbe& p, Square s, CellColor y,
                                    CellColor y_hat, double alpha);

struct PlannedEdit {
  Square square;
  CellColor from;
  CellColor to;
  double scale = 1.0;
};

struct InterventionPlan {
  std::vector<PlannedEdit> edits;
};

/// Throws std::invalid_argument on repeated squares or from == to.
void validate(const InterventionPlan& plan);

/// Linear: sum of alpha_i times the unit target-colour rows. TPR: the
/// per-edit binding deltas, each weighted by beta_i / |z_i|, are summed and
/// mapped through M_flat^+ once; the sum is not renormalised. A one-edit
/// plan therefore equals the single-edit operation. Throws ZeroDirection.
Eigen::VectorXd compose_intervene(const Eigen::VectorXd& h, const Probe& p, const InterventionPlan& plan);

/// Precomputed pseudo-inverse for repeated interventions with one probe.
class Intervener {
 public:
  explicit Intervener(const Probe& p);
  Eigen::VectorXd apply(const Eigen::VectorXd& h, const InterventionPlan& plan) const;
  const Eigen::MatrixXd& pinv() const { return pinv_; }

 private:
  Probe probe_;
  Eigen::MatrixXd pinv_;  // d_model x binding size, empty for linear probes
};

/// A model exposing one activation vector per transcript and next-move
/// logits computed from it.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual int d_model() const = 0;
  virtual Eigen::VectorXd encode(const othello::Transcript& moves) const = 0;
  virtual Eigen::VectorXd next_move_logits(const Eigen::VectorXd& h) const = 0;
  /// Activation-space length corresponding to one unit of intervention
  /// scale.
  virtual double activation_scale() const { return 1.0; }
};

/// Closed-loop stand-in: activations are random-coding encodings of the
/// egocentric board and the board is read back through the dual basis of
/// the codebook.
class SyntheticModel : public ModelAdapter {
 public:
  /// Throws InsufficientDimension when d_model < 192.
  explicit SyntheticModel(RandomCodingBook book);

  int d_model() const override { return book_.d_model(); }
  Eigen::VectorXd encode(const othello::Transcript& moves) const override;
  Eigen::VectorXd encode(const othello::Board& board) const;
  /// +10 on legal moves of the decoded board, -10 elsewhere.
  Eigen::VectorXd next_move_logits(const Eigen::VectorXd& h) const override;
  /// sqrt(d_model), the expected norm of one codeword.
  double activation_scale() const override;

  Labels decode(const Eigen::VectorXd& h) const;
  const Eigen::MatrixXd& dual() const { return dual_; }
  const RandomCodingBook& book() const { return book_; }

 private:
  RandomCodingBook book_;
  Eigen::MatrixXd dual_;  // 192 x d_model, dual_ * q^T = I
};

struct Case {
  othello::Transcript transcript;
  othello::Board board;
  othello::TargetBoard target;
};

/// Held-out cases: a random position from a random game (side to move has
/// a legal move) and a target from make_target_board whose legal move set
/// is non-empty. Deterministic in seed.
std::vector<Case> build_cases(int n_cases, int n_edits, std::uint64_t seed);

/// 0.25, 0.5, ..., 2.5
std::vector<double> default_grid();

struct CaseResult {
  int best_error = 0;
  int null_error = 0;
  std::vector<double> best_scales;
  int evaluations = 0;
};

struct SweepReport {
  int n_cases = 0;
  int k_edits = 0;
  std::vector<double> grid;
  double activation_scale = 1.0;
  std::string search;  // "cartesian" or "coordinate"
  double mean_best_error = 0;
  double null_baseline_error = 0;
  std::vector<CaseResult> per_case;
};

/// For each case, minimum error count over scale combinations from `grid`
/// (times the model's activation scale): every combination for up to two
/// edits, otherwise the best shared scale followed by two coordinate-wise
/// passes over the edits.
SweepReport sweep_evaluate(const ModelAdapter& model, const Probe& probe, const std::vector<Case>& cases,
                           const std::vector<double>& grid);

struct ExportedCase {
  std::size_t sample = 0;  // row of the source dataset
  othello::TargetBoard target;
  MoveSet target_moves;
};

/// Intervened activations for a model that cannot be run in process. Row
/// c * grid.size() + g of `activations` is case c at shared scale grid[g]
/// applied to every edit; its labels are the target board's.
struct InterventionExport {
  Dataset activations;
  std::vector<ExportedCase> cases;
  std::vector<double> grid;
};

/// Cases come from the boards implied by the dataset labels (Current to
/// move), sampled without replacement in seeded order. The same seed picks
/// the same cases for every layer of one model. Throws NoValidTarget when
/// fewer than n_cases usable rows exist.
InterventionExport export_interventions(const Probe& probe, const Dataset& source, int n_cases, int n_edits,
                                        const std::vector<double>& grid, std::uint64_t seed);

}  // namespace tpr::interventions
