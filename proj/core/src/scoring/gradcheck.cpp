#include "chorus/scoring/gradcheck.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace chorus::scoring {

GradientCheckReport gradient_check(const Network& net, const Eigen::VectorXd& theta,
                                   std::span<const ScoringInput* const> batch, bool train, std::uint64_t seed,
                                   int coords_per_tensor, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd weights(static_cast<Eigen::Index>(batch.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights[i] = normal(rng);
  const std::uint64_t mask_seed = rng();

  auto loss = [&](const Eigen::VectorXd& params, std::unique_ptr<ForwardCache>* cache) {
    std::mt19937_64 mask_rng(mask_seed);
    const ForwardOptions opts{train, &mask_rng};
    return weights.dot(net.forward(params, batch, opts, cache));
  };

  std::unique_ptr<ForwardCache> cache;
  loss(theta, &cache);
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(theta.size());
  net.backward(theta, *cache, weights, analytic);

  GradientCheckReport report;
  Eigen::VectorXd probe = theta;
  for (const auto& t : net.layout().tensors()) {
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(t.size()));
    std::iota(coords.begin(), coords.end(), t.offset);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min<std::size_t>(coords.size(), static_cast<std::size_t>(coords_per_tensor)));
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (Eigen::Index k : coords) {
      const double saved = probe[k];
      probe[k] = saved + step;
      const double up = loss(probe, nullptr);
      probe[k] = saved - step;
      const double down = loss(probe, nullptr);
      probe[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      diff += (analytic[k] - numeric) * (analytic[k] - numeric);
      norm_a += analytic[k] * analytic[k];
      norm_n += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(norm_a), std::sqrt(norm_n), 1e-7});
    TensorCheck check{t.name, coords.size(), std::sqrt(diff) / denom};
    report.max_relative_error = std::max(report.max_relative_error, check.relative_error);
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace chorus::scoring
