#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chorus/scoring/network.hpp"

namespace chorus::scoring {

struct TensorCheck {
  std::string name;
  std::size_t coordinates = 0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double max_relative_error = 0.0;
};

/// Compares backward() with central finite differences of L = sum_i c_i out_i
/// for random weights c. Up to `coords_per_tensor` coordinates are sampled per
/// tensor; the error of a tensor is |g_analytic - g_numeric| / max(|g_analytic|, |g_numeric|, 1e-7)
/// over the sampled coordinates. Dropout masks are frozen by replaying the same seed.
GradientCheckReport gradient_check(const Network& net, const Eigen::VectorXd& theta,
                                   std::span<const ScoringInput* const> batch, bool train, std::uint64_t seed,
                                   int coords_per_tensor = 16, double step = 1e-5);

}  // namespace chorus::scoring
