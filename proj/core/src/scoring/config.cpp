#include "chorus/scoring/config.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "chorus/model/types.hpp"

namespace chorus::scoring {
namespace {

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [e, s] : table) {
    if (e == v) return s;
  }
  return "unknown";
}

template <typename E, std::size_t N>
E parse(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table, std::string_view what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<Architecture, std::string_view>, 2> kArch{{
    {Architecture::kSmall, "small"},
    {Architecture::kDeep, "deep"},
}};
constexpr std::array<std::pair<Objective, std::string_view>, 2> kObjective{{
    {Objective::kReward, "reward"},
    {Objective::kQ, "q"},
}};
constexpr std::array<std::pair<OptimizerKind, std::string_view>, 5> kOptimizer{{
    {OptimizerKind::kAdam, "adam"},
    {OptimizerKind::kSgd, "sgd"},
    {OptimizerKind::kAdagrad, "adagrad"},
    {OptimizerKind::kAdadelta, "adadelta"},
    {OptimizerKind::kRmsprop, "rmsprop"},
}};
constexpr std::array<std::pair<Activation, std::string_view>, 3> kActivation{{
    {Activation::kSigmoid, "sigmoid"},
    {Activation::kRelu, "relu"},
    {Activation::kPrelu, "prelu"},
}};
constexpr std::array<std::pair<InitScheme, std::string_view>, 2> kInit{{
    {InitScheme::kHe, "he"},
    {InitScheme::kGlorot, "glorot"},
}};

template <typename T>
bool in(const std::vector<T>& grid, T v) {
  return std::find(grid.begin(), grid.end(), v) != grid.end();
}

}  // namespace

std::string_view to_string(Architecture v) { return name_of(v, kArch); }
std::string_view to_string(Objective v) { return name_of(v, kObjective); }
std::string_view to_string(OptimizerKind v) { return name_of(v, kOptimizer); }
std::string_view to_string(Activation v) { return name_of(v, kActivation); }
std::string_view to_string(InitScheme v) { return name_of(v, kInit); }

Architecture architecture_from_string(std::string_view s) { return parse(s, kArch, "architecture"); }
Objective objective_from_string(std::string_view s) { return parse(s, kObjective, "objective"); }
OptimizerKind optimizer_from_string(std::string_view s) { return parse(s, kOptimizer, "optimizer"); }
Activation activation_from_string(std::string_view s) { return parse(s, kActivation, "activation"); }
InitScheme init_from_string(std::string_view s) { return parse(s, kInit, "init scheme"); }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must be in (0, 1)");
  if (target_update < 1) throw ValidationError("target_update must be at least 1");
  if (patience < 1) throw ValidationError("patience must be at least 1");
  if (max_episodes < 1) throw ValidationError("max_episodes must be at least 1");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"optimizer", to_string(optimizer)},
          {"learning_rate", learning_rate},
          {"activation", to_string(activation)},
          {"init", to_string(init)},
          {"dropout", dropout},
          {"batch_size", batch_size},
          {"gamma", gamma},
          {"target_update", target_update},
          {"patience", patience},
          {"max_episodes", max_episodes},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("init")) c.init = init_from_string(j.at("init").get<std::string>());
  c.dropout = j.value("dropout", c.dropout);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.gamma = j.value("gamma", c.gamma);
  c.target_update = j.value("target_update", c.target_update);
  c.patience = j.value("patience", c.patience);
  c.max_episodes = j.value("max_episodes", c.max_episodes);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

TrainConfig small_reward_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kRmsprop;
  c.learning_rate = 1e-4;
  c.activation = Activation::kPrelu;
  c.init = InitScheme::kHe;
  c.dropout = 0.2;
  return c;
}

TrainConfig deep_q_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.learning_rate = 1e-4;
  c.activation = Activation::kSigmoid;
  c.init = InitScheme::kGlorot;
  c.dropout = 0.8;
  c.gamma = 0.99;
  c.target_update = 2000;
  return c;
}

std::size_t SearchSpace::grid_size() const {
  return optimizers.size() * learning_rates.size() * activations.size() * inits.size() * dropouts.size();
}

bool SearchSpace::contains(const TrainConfig& cfg) const {
  return in(optimizers, cfg.optimizer) && in(learning_rates, cfg.learning_rate) && in(activations, cfg.activation) &&
         in(inits, cfg.init) && in(dropouts, cfg.dropout);
}

}  // namespace chorus::scoring
