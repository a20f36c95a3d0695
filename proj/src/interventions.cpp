#include "tpr/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "tpr/errors.hpp"
#include "tpr/linalg.hpp"
#include "tpr/parallel.hpp"

namespace tpr::interventions {
namespace {

constexpr double kMinNorm = 1e-12;

Eigen::VectorXd filler_delta(const Eigen::MatrixXd& F, CellColor y, CellColor y_hat) {
  return (F.row(static_cast<int>(y_hat)) - F.row(static_cast<int>(y))).transpose();
}

Eigen::VectorXd unit_or_throw(const Eigen::VectorXd& v, const char* what) {
  const double n = v.norm();
  if (n < kMinNorm) throw ZeroDirection(std::string(what) + " has zero norm");
  return v / n;
}

Eigen::VectorXd delta_for(const Probe& p, const PlannedEdit& e) {
  if (auto* b = std::get_if<BilinearProbe>(&p)) return binding_delta(*b, e.square, e.from, e.to);
  return binding_delta(std::get<TrilinearProbe>(p), e.square, e.from, e.to);
}

Eigen::MatrixXd binding_pinv(const Probe& p) {
  if (auto* b = std::get_if<BilinearProbe>(&p)) return linalg::pinv(b->M);
  if (auto* t = std::get_if<TrilinearProbe>(&p)) return linalg::pinv(t->M);
  return {};
}

}  // namespace

MoveSet moves_from_logits(const Eigen::VectorXd& logits, double threshold) {
  if (logits.size() != 64) throw DimensionMismatch("next-move logits must have 64 entries");
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  const Eigen::ArrayXd prob = e / e.sum();
  std::uint64_t bits = 0;
  for (int s = 0; s < 64; ++s) {
    if (prob(s) > threshold) bits |= std::uint64_t{1} << s;
  }
  return MoveSet(bits);
}

Eigen::VectorXd linear_intervene(const Eigen::VectorXd& h, const LinearProbe& p, Square s, CellColor c,
                                 double alpha) {
  if (h.size() != p.d_model()) throw DimensionMismatch("activation length does not match the probe");
  return h + alpha * unit_or_throw(p.W.row(3 * s.pos() + static_cast<int>(c)).transpose(), "probe row");
}

Eigen::VectorXd binding_delta(const BilinearProbe& p, Square s, CellColor y, CellColor y_hat) {
  const Eigen::VectorXd df = filler_delta(p.F, y, y_hat);
  Eigen::VectorXd out(p.d_r() * p.d_f());
  for (int a = 0; a < p.d_r(); ++a)
    for (int b = 0; b < p.d_f(); ++b) out(a * p.d_f() + b) = p.R(s.pos(), a) * df(b);
  return out;
}

Eigen::VectorXd binding_delta(const TrilinearProbe& p, Square s, CellColor y, CellColor y_hat) {
  const Eigen::VectorXd df = filler_delta(p.F, y, y_hat);
  const int i = s.pos() / 8, j = s.pos() % 8;
  Eigen::VectorXd out(p.d_u() * p.d_v() * p.d_f());
  for (int a = 0; a < p.d_u(); ++a)
    for (int b = 0; b < p.d_v(); ++b)
      for (int e = 0; e < p.d_f(); ++e) out((a * p.d_v() + b) * p.d_f() + e) = p.U(i, a) * p.V(j, b) * df(e);
  return out;
}

Eigen::VectorXd tpr_intervene(const Eigen::VectorXd& h, const BilinearProbe& p, Square s, CellColor y,
                              CellColor y_hat, double alpha) {
  return compose_intervene(h, p, InterventionPlan{{{s, y, y_hat, alpha}}});
}

Eigen::VectorXd trilinear_intervene(const Eigen::VectorXd& h, const TrilinearProbe& p, Square s, CellColor y,
                                    CellColor y_hat, double alpha) {
  return compose_intervene(h, p, InterventionPlan{{{s, y, y_hat, alpha}}});
}

void validate(const InterventionPlan& plan) {
  std::set<int> seen;
  for (const auto& e : plan.edits) {
    if (e.from == e.to) throw std::invalid_argument("edit on " + e.square.token() + " does not change the colour");
    if (!seen.insert(e.square.pos()).second) {
      throw std::invalid_argument("square " + e.square.token() + " is edited twice");
    }
  }
}

Eigen::VectorXd compose_intervene(const Eigen::VectorXd& h, const Probe& p, const InterventionPlan& plan) {
  return Intervener(p).apply(h, plan);
}

Intervener::Intervener(const Probe& p) : probe_(p) {
  tpr::validate(p);
  pinv_ = binding_pinv(p);
}

Eigen::VectorXd Intervener::apply(const Eigen::VectorXd& h, const InterventionPlan& plan) const {
  validate(plan);
  if (h.size() != d_model_of(probe_)) throw DimensionMismatch("activation length does not match the probe");
  if (auto* lin = std::get_if<LinearProbe>(&probe_)) {
    Eigen::VectorXd out = h;
    for (const auto& e : plan.edits) out = linear_intervene(out, *lin, e.square, e.to, e.scale);
    return out;
  }
  Eigen::VectorXd total = Eigen::VectorXd::Zero(pinv_.cols());
  for (const auto& e : plan.edits) {
    const Eigen::VectorXd delta = delta_for(probe_, e);
    const double zn = (pinv_ * delta).norm();
    if (zn < kMinNorm) throw ZeroDirection("intervention direction for " + e.square.token() + " has zero norm");
    total += (e.scale / zn) * delta;
  }
  return h + pinv_ * total;
}

SyntheticModel::SyntheticModel(RandomCodingBook book) : book_(std::move(book)) {
  if (book_.d_model() < kNumReadouts) {
    throw InsufficientDimension("synthetic model needs d_model >= 192, got " + std::to_string(book_.d_model()));
  }
  dual_ = linalg::pinv(book_.q.transpose());
}

Eigen::VectorXd SyntheticModel::encode(const othello::Board& board) const {
  return random_coding_encode(book_, othello::egocentric_labels(board));
}

Eigen::VectorXd SyntheticModel::encode(const othello::Transcript& moves) const {
  const auto positions = othello::replay(moves);
  return encode(positions.empty() ? othello::initial_board() : positions.back());
}

Labels SyntheticModel::decode(const Eigen::VectorXd& h) const {
  if (h.size() != d_model()) throw DimensionMismatch("activation length does not match the model");
  const Eigen::VectorXd scores = dual_ * h;
  Labels out;
  for (int s = 0; s < 64; ++s) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (scores(3 * s + c) > scores(3 * s + best)) best = c;
    }
    out[static_cast<std::size_t>(s)] = static_cast<CellColor>(best);
  }
  return out;
}

Eigen::VectorXd SyntheticModel::next_move_logits(const Eigen::VectorXd& h) const {
  const MoveSet legal = othello::legal_moves(othello::board_from_labels(decode(h)));
  Eigen::VectorXd logits(64);
  for (int s = 0; s < 64; ++s) logits(s) = legal.contains(Square::from_pos(s)) ? 10.0 : -10.0;
  return logits;
}

double SyntheticModel::activation_scale() const { return std::sqrt(static_cast<double>(d_model())); }

std::vector<Case> build_cases(int n_cases, int n_edits, std::uint64_t seed) {
  if (n_cases < 0 || n_edits < 1) throw std::invalid_argument("need n_cases >= 0 and n_edits >= 1");
  std::vector<Case> cases;
  const std::uint64_t stream = mix_seed(seed, 0xCA5E5ULL);
  const std::uint64_t max_attempts = 1000 + 100 * static_cast<std::uint64_t>(n_cases);
  for (std::uint64_t attempt = 0; cases.size() < static_cast<std::size_t>(n_cases); ++attempt) {
    if (attempt == max_attempts) throw NoValidTarget("could not build enough intervention cases");
    const std::uint64_t s = mix_seed(stream, attempt);
    const othello::Transcript game = othello::random_game(s);
    const auto positions = othello::replay(game);
    std::vector<std::size_t> playable;
    for (std::size_t t = 0; t < positions.size(); ++t) {
      if (!othello::legal_moves(positions[t]).empty()) playable.push_back(t);
    }
    if (playable.empty()) continue;
    std::mt19937_64 rng(mix_seed(s, 1));
    const std::size_t t = playable[std::uniform_int_distribution<std::size_t>(0, playable.size() - 1)(rng)];
    try {
      othello::TargetBoard target = othello::make_target_board(positions[t], mix_seed(s, 2), n_edits);
      // a softmax always puts mass >= 1/64 somewhere, so an empty move set
      // can never be predicted
      if (othello::legal_moves(target.board).empty()) continue;
      cases.push_back({othello::Transcript(game.begin(), game.begin() + static_cast<std::ptrdiff_t>(t + 1)),
                       positions[t], std::move(target)});
    } catch (const NoValidTarget&) {
    }
  }
  return cases;
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 10; ++i) g.push_back(0.25 * i);
  return g;
}

SweepReport sweep_evaluate(const ModelAdapter& model, const Probe& probe, const std::vector<Case>& cases,
                           const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("scale grid is empty");
  if (d_model_of(probe) != model.d_model()) throw DimensionMismatch("probe and model differ in d_model");
  const Intervener iv(probe);
  const double unit = model.activation_scale();

  SweepReport rep;
  rep.n_cases = static_cast<int>(cases.size());
  rep.k_edits = cases.empty() ? 0 : static_cast<int>(cases.front().target.edits.size());
  rep.grid = grid;
  rep.activation_scale = unit;
  rep.search = rep.k_edits <= 2 ? "cartesian" : "coordinate";
  rep.per_case.resize(cases.size());

  parallel_for(cases.size(), [&](std::size_t ci) {
    const Case& c = cases[ci];
    const Eigen::VectorXd h = model.encode(c.transcript);
    const MoveSet orig = moves_from_logits(model.next_move_logits(h));
    const MoveSet target = othello::legal_moves(c.target.board);
    const std::size_t k = c.target.edits.size();
    CaseResult& out = rep.per_case[ci];
    out.null_error = error_count(orig, target);

    InterventionPlan plan;
    for (const auto& e : c.target.edits) plan.edits.push_back({e.square, e.from, e.to, 0.0});
    auto evaluate = [&](const std::vector<double>& scales) {
      for (std::size_t i = 0; i < k; ++i) plan.edits[i].scale = scales[i] * unit;
      ++out.evaluations;
      return error_count(moves_from_logits(model.next_move_logits(iv.apply(h, plan))), target);
    };
    out.best_error = std::numeric_limits<int>::max();
    auto consider = [&](const std::vector<double>& scales) {
      const int err = evaluate(scales);
      if (err < out.best_error) {
        out.best_error = err;
        out.best_scales = scales;
      }
    };

    std::vector<double> scales(k, grid.front());
    if (k <= 2) {
      // odometer over grid^k
      std::vector<std::size_t> idx(k, 0);
      while (out.best_error > 0) {
        for (std::size_t i = 0; i < k; ++i) scales[i] = grid[idx[i]];
        consider(scales);
        std::size_t d = 0;
        while (d < k && ++idx[d] == grid.size()) idx[d++] = 0;
        if (d == k) break;
      }
    } else {
      for (double g : grid) {
        if (out.best_error == 0) break;
        consider(std::vector<double>(k, g));
      }
      for (int pass = 0; pass < 2 && out.best_error > 0; ++pass) {
        for (std::size_t i = 0; i < k && out.best_error > 0; ++i) {
          std::vector<double> trial = out.best_scales;
          for (double g : grid) {
            if (out.best_error == 0) break;
            trial[i] = g;
            consider(trial);
          }
        }
      }
    }
  });

  for (const auto& r : rep.per_case) {
    rep.mean_best_error += r.best_error;
    rep.null_baseline_error += r.null_error;
  }
  if (!cases.empty()) {
    rep.mean_best_error /= static_cast<double>(cases.size());
    rep.null_baseline_error /= static_cast<double>(cases.size());
  }
  return rep;
}

InterventionExport export_interventions(const Probe& probe, const Dataset& source, int n_cases, int n_edits,
                                        const std::vector<double>& grid, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("scale grid is empty");
  if (n_cases < 0 || n_edits < 1) throw std::invalid_argument("need n_cases >= 0 and n_edits >= 1");
  if (source.d_model != d_model_of(probe)) throw DimensionMismatch("dataset and probe differ in d_model");
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed, 0xE4907ULL));
  std::shuffle(order.begin(), order.end(), rng);

  InterventionExport out;
  out.grid = grid;
  for (std::size_t row : order) {
    if (out.cases.size() == static_cast<std::size_t>(n_cases)) break;
    const othello::Board board = othello::board_from_labels(source.labels[row]);
    if (othello::legal_moves(board).empty()) continue;
    try {
      othello::TargetBoard target = othello::make_target_board(board, mix_seed(seed, row), n_edits);
      const MoveSet moves = othello::legal_moves(target.board);
      if (moves.empty()) continue;
      out.cases.push_back({row, std::move(target), moves});
    } catch (const NoValidTarget&) {
    }
  }
  if (out.cases.size() < static_cast<std::size_t>(n_cases)) {
    throw NoValidTarget("only " + std::to_string(out.cases.size()) + " usable rows for intervention cases");
  }

  const Intervener iv(probe);
  Dataset& d = out.activations;
  d.d_model = source.d_model;
  d.source = source.source;
  d.split = source.split;
  d.layer = source.layer;
  d.activations.resize(static_cast<Eigen::Index>(out.cases.size() * grid.size()), source.d_model);
  d.labels.resize(out.cases.size() * grid.size());
  parallel_for(out.cases.size(), [&](std::size_t c) {
    const ExportedCase& ec = out.cases[c];
    const Eigen::VectorXd h = source.sample(ec.sample);
    InterventionPlan plan;
    for (const auto& e : ec.target.edits) plan.edits.push_back({e.square, e.from, e.to, 0.0});
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (auto& e : plan.edits) e.scale = grid[g];
      const std::size_t r = c * grid.size() + g;
      d.activations.row(static_cast<Eigen::Index>(r)) = iv.apply(h, plan).transpose().cast<float>();
      d.labels[r] = othello::egocentric_labels(ec.target.board);
    }
  });
  return out;
}

}  // namespace tpr::interventions
