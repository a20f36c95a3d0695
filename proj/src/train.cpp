#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "tpr/errors.hpp"
#include "tpr/probes.hpp"

namespace tpr {
namespace {

// Decoupled weight decay Adam, one moment pair per parameter tensor.
class AdamW {
 public:
  AdamW(const TrainConfig& cfg, const std::vector<Eigen::MatrixXd*>& params) : cfg_(cfg) {
    for (const auto* p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Eigen::MatrixXd*>& params,
            const std::vector<const Eigen::MatrixXd*>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Eigen::MatrixXd& p = *params[k];
      const Eigen::MatrixXd& g = *grads[k];
      p *= 1.0 - cfg_.lr * cfg_.weight_decay;
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseAbs2();
      p.array() -= cfg_.lr * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg_.eps);
    }
  }

 private:
  TrainConfig cfg_;
  int t_ = 0;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
};

void check_config(const TrainConfig& cfg) {
  if (!(cfg.lr > 0) || cfg.weight_decay < 0 || cfg.batch_size < 1 || cfg.epochs < 1 ||
      cfg.patience < 1 || cfg.validate_every < 1) {
    throw std::invalid_argument("training configuration values must be positive");
  }
}

}  // namespace

TrainResult train(const Probe& init, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg) {
  check_config(cfg);
  validate(init);
  const int d_model = d_model_of(init);
  if (train_set.d_model != d_model || val_set.d_model != d_model) {
    throw DimensionMismatch("dataset d_model does not match the probe");
  }
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw std::invalid_argument("training and validation sets must be non-empty");
  }

  TrainResult result{init, {}};
  Probe probe = init;
  auto params = parameters(probe);
  AdamW opt(cfg, params);
  const Batch val = Batch::from_dataset(val_set);

  TrainHistory& hist = result.history;
  hist.best_val_loss = std::numeric_limits<double>::infinity();
  int stale = 0;

  auto validate_now = [&](int step) {
    const double loss = batch_loss(probe, val);
    hist.validations.push_back({step, loss, accuracy(probe, val_set)});
    if (loss < hist.best_val_loss) {
      hist.best_val_loss = loss;
      hist.best_step = step;
      result.probe = probe;
      stale = 0;
    } else {
      ++stale;
    }
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs && !hist.early_stopped; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Batch batch = Batch::from_dataset(
          train_set, std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                              order.begin() + static_cast<std::ptrdiff_t>(end)));
      double loss = 0;
      Probe grad = gradients(probe, batch, &loss);
      opt.step(params, parameters(std::as_const(grad)));
      hist.train_loss.push_back(loss);
      ++step;
      if (step % cfg.validate_every == 0) {
        validate_now(step);
        if (stale >= cfg.patience) {
          hist.early_stopped = true;
          break;
        }
      }
    }
  }
  if (hist.validations.empty() || hist.validations.back().step != step) validate_now(step);
  hist.steps = step;
  round_to_f32(result.probe);
  return result;
}

}  // namespace tpr
