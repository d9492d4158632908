#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace chorus::scoring {

enum class Architecture { kSmall, kDeep };
/// kReward predicts P(upvote) through a two-way softmax; kQ predicts a bare scalar.
enum class Objective { kReward, kQ };
enum class OptimizerKind { kAdam, kSgd, kAdagrad, kAdadelta, kRmsprop };
enum class Activation { kSigmoid, kRelu, kPrelu };
enum class InitScheme { kHe, kGlorot };

std::string_view to_string(Architecture v);
std::string_view to_string(Objective v);
std::string_view to_string(OptimizerKind v);
std::string_view to_string(Activation v);
std::string_view to_string(InitScheme v);

/// Parsers throw ValidationError on unknown names.
Architecture architecture_from_string(std::string_view s);
Objective objective_from_string(std::string_view s);
OptimizerKind optimizer_from_string(std::string_view s);
Activation activation_from_string(std::string_view s);
InitScheme init_from_string(std::string_view s);

/// Training hyper-parameters shared by both training loops.
struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kRmsprop;
  double learning_rate = 1e-4;
  Activation activation = Activation::kPrelu;
  InitScheme init = InitScheme::kHe;
  double dropout = 0.2;  // probability of dropping a unit
  int batch_size = 128;
  double gamma = 0.99;
  int target_update = 2000;  // tau, in optimizer steps
  int patience = 20;
  int max_episodes = 10000;
  std::uint64_t seed = 0;

  /// Throws ValidationError when a value is out of its domain.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

/// Best small reward-classifier configuration found by random search.
TrainConfig small_reward_preset();
/// Best deep Q-network configuration found by random search.
TrainConfig deep_q_preset();

/// The grids random search draws from.
struct SearchSpace {
  std::vector<OptimizerKind> optimizers{OptimizerKind::kAdam, OptimizerKind::kSgd, OptimizerKind::kAdagrad,
                                        OptimizerKind::kAdadelta, OptimizerKind::kRmsprop};
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4};
  std::vector<Activation> activations{Activation::kSigmoid, Activation::kRelu, Activation::kPrelu};
  std::vector<InitScheme> inits{InitScheme::kHe, InitScheme::kGlorot};
  std::vector<double> dropouts{0.2, 0.4, 0.6, 0.8};

  std::size_t grid_size() const;
  /// True when every searched field of `cfg` lies on the grid.
  bool contains(const TrainConfig& cfg) const;
};

}  // namespace chorus::scoring
