#pragma once

#include <Eigen/Core>

#include "chorus/scoring/config.hpp"

namespace chorus::scoring {

/// First-order optimizer with per-parameter state. Secondary constants use the
/// usual defaults: Adam betas (0.9, 0.999), RMSProp decay 0.9, Adadelta decay 0.95.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index size);

  /// theta <- theta - update(grad).
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

  OptimizerKind kind() const { return kind_; }
  long steps() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  long steps_ = 0;
  Eigen::VectorXd m_;  // first moment / accumulated squares
  Eigen::VectorXd v_;  // second moment / accumulated updates
};

}  // namespace chorus::scoring
