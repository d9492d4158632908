#pragma once

#include <span>

namespace chorus::scoring {

/// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp] before the log.
inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary cross-entropy. Throws ValidationError on size mismatch or empty input.
double cross_entropy_loss(std::span<const double> p, std::span<const double> y);

/// 0.5 d^2 when |d| < 1, else |d| - 0.5, with d = q - y.
double huber_loss(double q, double y);
/// d(huber)/dq: d clipped to [-1, 1].
double huber_grad(double q, double y);

/// Logistic function, numerically safe for large |z|.
double sigmoid(double z);

}  // namespace chorus::scoring
