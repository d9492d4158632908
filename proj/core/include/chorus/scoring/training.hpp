#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/scoring/config.hpp"
#include "chorus/scoring/network.hpp"
#include "chorus/scoring/optimizer.hpp"

namespace chorus::scoring {

/// Raised when training diverges (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (state, candidate) with its vote, for the reward classifier.
struct LabeledSample {
  ScoringInput input;
  double label = 0.0;  // 1 for up-voted
};

/// One (s, a, r, s', next candidates) transition, already encoded.
struct QSample {
  ScoringInput input;
  double reward = 0.0;
  bool terminal = true;
  std::vector<ScoringInput> next;  // candidates available in s'
};

/// r for terminal transitions, otherwise r + gamma * Q_target(s', argmax_a' Q_online(s', a')).
/// Ties in the argmax go to the first candidate. Throws ProtocolError when a
/// non-terminal transition has no next candidates.
double double_dqn_target(const Network& net, const Eigen::VectorXd& online, const Eigen::VectorXd& target,
                         const QSample& sample, double gamma);

/// F1 of the positive class with predictions p >= 0.5. Zero when nothing is predicted or present.
double f1_score(std::span<const double> probabilities, std::span<const double> labels);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_metric = 0.0;  // F1 (supervised) or Huber loss (fitted Q)
  double best_metric = 0.0;
  int patience_left = 0;
  long steps = 0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Eigen::VectorXd theta;  // best-validation parameters
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_metric = 0.0;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch cross-entropy training of a reward network with early stopping
/// on validation F1. Throws ValidationError on empty splits or a Q network.
TrainResult train_supervised(const Network& net, std::span<const LabeledSample> train,
                             std::span<const LabeledSample> valid, const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {},
                             const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Online network, frozen target copy and optimizer for fitted Q-iteration.
class FittedQTrainer {
 public:
  FittedQTrainer(const Network& net, const TrainConfig& cfg, Eigen::VectorXd initial);

  /// One optimizer step on the batch's mean Huber loss against double-DQN
  /// targets; copies online into target when the step count reaches a multiple
  /// of target_update. Returns the batch loss.
  double train_batch(std::span<const QSample* const> batch);
  /// Mean Huber loss of the online network against targets from the frozen copy.
  double validation_loss(std::span<const QSample> data) const;

  const Eigen::VectorXd& online() const { return online_; }
  const Eigen::VectorXd& target() const { return target_; }
  long steps() const { return steps_; }

 private:
  const Network& net_;
  TrainConfig cfg_;
  Eigen::VectorXd online_;
  Eigen::VectorXd target_;
  Optimizer optimizer_;
  std::mt19937_64 rng_;
  long steps_ = 0;
};

/// Neural fitted Q-iteration with double-DQN targets, a target copy refreshed
/// every target_update steps, and early stopping on validation Huber loss.
TrainResult train_fitted_q(const Network& net, std::span<const QSample> train, std::span<const QSample> valid,
                           const TrainConfig& cfg, const EpochCallback& on_epoch = {},
                           const std::optional<Eigen::VectorXd>& initial = std::nullopt);

/// Transition of a finite MDP whose (state, action) pairs are numbered.
struct TabularTransition {
  std::size_t key = 0;
  double reward = 0.0;
  std::vector<std::size_t> next_keys;  // empty for terminal transitions
};

/// Fixed point of Q(k) = mean over transitions t with key k of
/// r_t + gamma * max over next keys of Q. Throws ValidationError when a next key
/// has no transition of its own.
std::vector<double> fitted_q_dp(std::span<const TabularTransition> transitions, double gamma,
                                double tolerance = 1e-12, int max_iterations = 100000);

}  // namespace chorus::scoring
