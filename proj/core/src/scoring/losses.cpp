#include "chorus/scoring/losses.hpp"

#include <algorithm>
#include <cmath>

#include "chorus/model/types.hpp"

namespace chorus::scoring {

double cross_entropy_loss(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) throw ValidationError("cross_entropy_loss: size mismatch");
  if (p.empty()) throw ValidationError("cross_entropy_loss: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return total / static_cast<double>(p.size());
}

double huber_loss(double q, double y) {
  const double d = std::abs(q - y);
  return d < 1.0 ? 0.5 * d * d : d - 0.5;
}

double huber_grad(double q, double y) { return std::clamp(q - y, -1.0, 1.0); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace chorus::scoring
