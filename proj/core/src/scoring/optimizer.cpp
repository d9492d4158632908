#include "chorus/scoring/optimizer.hpp"

#include <cmath>

#include "chorus/model/types.hpp"

namespace chorus::scoring {

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, Eigen::Index size)
    : kind_(kind), lr_(learning_rate), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
}

void Optimizer::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) throw ValidationError("optimizer size mismatch");
  ++steps_;
  switch (kind_) {
    case OptimizerKind::kSgd:
      theta -= lr_ * grad;
      break;
    case OptimizerKind::kAdam: {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      m_ = b1 * m_ + (1.0 - b1) * grad;
      v_ = b2 * v_ + (1.0 - b2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
      break;
    }
    case OptimizerKind::kAdagrad: {
      constexpr double eps = 1e-10;
      m_ += grad.cwiseAbs2();
      theta.array() -= lr_ * grad.array() / (m_.array().sqrt() + eps);
      break;
    }
    case OptimizerKind::kAdadelta: {
      constexpr double rho = 0.95, eps = 1e-6;
      m_ = rho * m_ + (1.0 - rho) * grad.cwiseAbs2();
      const Eigen::ArrayXd update = ((v_.array() + eps).sqrt() / (m_.array() + eps).sqrt()) * grad.array();
      v_ = rho * v_ + (1.0 - rho) * update.square().matrix();
      theta.array() -= lr_ * update;
      break;
    }
    case OptimizerKind::kRmsprop: {
      constexpr double rho = 0.9, eps = 1e-8;
      m_ = rho * m_ + (1.0 - rho) * grad.cwiseAbs2();
      theta.array() -= lr_ * grad.array() / (m_.array().sqrt() + eps);
      break;
    }
  }
}

}  // namespace chorus::scoring
