#include "chorus/scoring/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chorus/model/types.hpp"
#include "chorus/scoring/losses.hpp"

namespace chorus::scoring {
namespace {

using Eigen::VectorXd;

/// Targets for a batch: one online pass over every next candidate, then one
/// target pass over the chosen ones.
std::vector<double> batch_targets(const Network& net, const VectorXd& online, const VectorXd& target,
                                  std::span<const QSample* const> batch, double gamma) {
  std::vector<const ScoringInput*> next;
  std::vector<std::size_t> first(batch.size() + 1, 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const QSample& s = *batch[i];
    if (!s.terminal) {
      if (s.next.empty()) throw ProtocolError("non-terminal transition without next candidates");
      for (const auto& c : s.next) next.push_back(&c);
    }
    first[i + 1] = next.size();
  }
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) y[i] = batch[i]->reward;
  if (next.empty()) return y;

  const VectorXd q_online = net.forward(online, next, ForwardOptions{}, nullptr);
  std::vector<const ScoringInput*> chosen;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (first[i] == first[i + 1]) continue;
    std::size_t best = first[i];
    for (std::size_t k = first[i] + 1; k < first[i + 1]; ++k) {
      if (q_online[static_cast<Eigen::Index>(k)] > q_online[static_cast<Eigen::Index>(best)]) best = k;
    }
    chosen.push_back(next[best]);
    owner.push_back(i);
  }
  const VectorXd q_target = net.forward(target, chosen, ForwardOptions{}, nullptr);
  for (std::size_t k = 0; k < owner.size(); ++k) {
    y[owner[k]] += gamma * q_target[static_cast<Eigen::Index>(k)];
  }
  return y;
}

template <typename T>
std::vector<const T*> pointers(std::span<const T> data) {
  std::vector<const T*> out;
  out.reserve(data.size());
  for (const auto& d : data) out.push_back(&d);
  return out;
}

void check_finite(double loss, int epoch, long step) {
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                        std::to_string(step) + "; try a smaller learning rate");
  }
}

VectorXd probabilities(const Network& net, const VectorXd& theta, std::span<const LabeledSample> data) {
  VectorXd out(static_cast<Eigen::Index>(data.size()));
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<const ScoringInput*> batch;
    for (std::size_t i = start; i < std::min(data.size(), start + kChunk); ++i) batch.push_back(&data[i].input);
    const VectorXd z = net.forward(theta, batch, ForwardOptions{}, nullptr);
    for (Eigen::Index k = 0; k < z.size(); ++k) out[static_cast<Eigen::Index>(start) + k] = sigmoid(z[k]);
  }
  return out;
}

}  // namespace

double double_dqn_target(const Network& net, const VectorXd& online, const VectorXd& target, const QSample& sample,
                         double gamma) {
  const QSample* one[] = {&sample};
  return batch_targets(net, online, target, one, gamma).front();
}

double f1_score(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.size() != labels.size()) throw ValidationError("f1_score: size mismatch");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] >= 0.5;
    const bool actual = labels[i] >= 0.5;
    tp += predicted && actual;
    fp += predicted && !actual;
    fn += !predicted && actual;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch},           {"train_loss", train_loss},       {"valid_metric", valid_metric},
          {"best_metric", best_metric}, {"patience_left", patience_left}, {"steps", steps}};
}

TrainResult train_supervised(const Network& net, std::span<const LabeledSample> train,
                             std::span<const LabeledSample> valid, const TrainConfig& cfg,
                             const EpochCallback& on_epoch, const std::optional<VectorXd>& initial) {
  cfg.validate();
  if (train.empty() || valid.empty()) throw ValidationError("train_supervised needs non-empty train and valid splits");
  if (net.spec().objective != Objective::kReward) throw ValidationError("train_supervised needs a reward network");

  VectorXd theta = initial ? *initial : net.initial_parameters(cfg.seed);
  Optimizer optimizer(cfg.optimizer, cfg.learning_rate, theta.size());
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> valid_labels;
  for (const auto& s : valid) valid_labels.push_back(s.label);

  TrainResult result;
  result.theta = theta;
  result.best_metric = -1.0;
  int patience = cfg.patience;
  for (int epoch = 1; epoch <= cfg.max_episodes && patience > 0; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const ScoringInput*> batch;
      std::vector<double> labels;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&train[order[k]].input);
        labels.push_back(train[order[k]].label);
      }
      std::unique_ptr<ForwardCache> cache;
      const VectorXd z = net.forward(theta, batch, ForwardOptions{true, &rng}, &cache);
      std::vector<double> p(labels.size());
      VectorXd dz(z.size());
      const double n = static_cast<double>(labels.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        p[static_cast<std::size_t>(i)] = sigmoid(z[i]);
        dz[i] = (p[static_cast<std::size_t>(i)] - labels[static_cast<std::size_t>(i)]) / n;
      }
      const double loss = cross_entropy_loss(p, labels);
      check_finite(loss, epoch, optimizer.steps());
      total += loss * n;
      VectorXd grad = VectorXd::Zero(theta.size());
      net.backward(theta, *cache, dz, grad);
      optimizer.step(theta, grad);
    }
    const VectorXd pv = probabilities(net, theta, valid);
    const double f1 = f1_score(std::span<const double>(pv.data(), static_cast<std::size_t>(pv.size())), valid_labels);
    if (f1 > result.best_metric) {
      result.best_metric = f1;
      result.best_epoch = epoch;
      result.theta = theta;
      patience = cfg.patience;
    } else {
      --patience;
    }
    EpochRecord rec{epoch, total / static_cast<double>(train.size()), f1, result.best_metric, patience,
                    optimizer.steps()};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.early_stopped = patience == 0;
  return result;
}

FittedQTrainer::FittedQTrainer(const Network& net, const TrainConfig& cfg, VectorXd initial)
    : net_(net),
      cfg_(cfg),
      online_(std::move(initial)),
      target_(online_),
      optimizer_(cfg.optimizer, cfg.learning_rate, online_.size()),
      rng_(cfg.seed ^ 0x9e3779b9ULL) {
  cfg_.validate();
  if (net.spec().objective != Objective::kQ) throw ValidationError("fitted Q-iteration needs a Q network");
  if (online_.size() != net.parameter_count()) throw ValidationError("initial parameters do not match the network");
}

double FittedQTrainer::train_batch(std::span<const QSample* const> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const std::vector<double> y = batch_targets(net_, online_, target_, batch, cfg_.gamma);
  std::vector<const ScoringInput*> inputs;
  for (const auto* s : batch) inputs.push_back(&s->input);
  std::unique_ptr<ForwardCache> cache;
  const VectorXd q = net_.forward(online_, inputs, ForwardOptions{true, &rng_}, &cache);
  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  VectorXd dq(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    loss += huber_loss(q[i], y[static_cast<std::size_t>(i)]);
    dq[i] = huber_grad(q[i], y[static_cast<std::size_t>(i)]) / n;
  }
  loss /= n;
  check_finite(loss, 0, steps_);
  VectorXd grad = VectorXd::Zero(online_.size());
  net_.backward(online_, *cache, dq, grad);
  optimizer_.step(online_, grad);
  ++steps_;
  if (steps_ % cfg_.target_update == 0) target_ = online_;
  return loss;
}

double FittedQTrainer::validation_loss(std::span<const QSample> data) const {
  if (data.empty()) throw ValidationError("empty validation set");
  double total = 0.0;
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    std::vector<const QSample*> batch;
    std::vector<const ScoringInput*> inputs;
    for (std::size_t i = start; i < std::min(data.size(), start + kChunk); ++i) {
      batch.push_back(&data[i]);
      inputs.push_back(&data[i].input);
    }
    const std::vector<double> y = batch_targets(net_, online_, target_, batch, cfg_.gamma);
    const VectorXd q = net_.forward(online_, inputs, ForwardOptions{}, nullptr);
    for (Eigen::Index i = 0; i < q.size(); ++i) total += huber_loss(q[i], y[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train_fitted_q(const Network& net, std::span<const QSample> train, std::span<const QSample> valid,
                           const TrainConfig& cfg, const EpochCallback& on_epoch,
                           const std::optional<VectorXd>& initial) {
  cfg.validate();
  if (train.empty() || valid.empty()) throw ValidationError("train_fitted_q needs non-empty train and valid splits");
  FittedQTrainer trainer(net, cfg, initial ? *initial : net.initial_parameters(cfg.seed));
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  auto order = pointers(train);

  TrainResult result;
  result.theta = trainer.online();
  result.best_metric = std::numeric_limits<double>::infinity();
  int patience = cfg.patience;
  for (int epoch = 1; epoch <= cfg.max_episodes && patience > 0; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const QSample* const> batch(order.data() + start, end - start);
      total += trainer.train_batch(batch) * static_cast<double>(batch.size());
    }
    const double loss = trainer.validation_loss(valid);
    check_finite(loss, epoch, trainer.steps());
    if (loss < result.best_metric) {
      result.best_metric = loss;
      result.best_epoch = epoch;
      result.theta = trainer.online();
      patience = cfg.patience;
    } else {
      --patience;
    }
    EpochRecord rec{epoch, total / static_cast<double>(train.size()), loss, result.best_metric, patience,
                    trainer.steps()};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.early_stopped = patience == 0;
  return result;
}

std::vector<double> fitted_q_dp(std::span<const TabularTransition> transitions, double gamma, double tolerance,
                                int max_iterations) {
  std::size_t keys = 0;
  for (const auto& t : transitions) keys = std::max(keys, t.key + 1);
  std::vector<int> count(keys, 0);
  for (const auto& t : transitions) ++count[t.key];
  for (const auto& t : transitions) {
    for (std::size_t k : t.next_keys) {
      if (k >= keys || count[k] == 0) throw ValidationError("next key " + std::to_string(k) + " has no transition");
    }
  }
  std::vector<double> q(keys, 0.0);
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<double> next(keys, 0.0);
    for (const auto& t : transitions) {
      double best = 0.0;
      if (!t.next_keys.empty()) {
        best = -std::numeric_limits<double>::infinity();
        for (std::size_t k : t.next_keys) best = std::max(best, q[k]);
      }
      next[t.key] += (t.reward + gamma * best) / count[t.key];
    }
    double delta = 0.0;
    for (std::size_t k = 0; k < keys; ++k) delta = std::max(delta, std::abs(next[k] - q[k]));
    q = std::move(next);
    if (delta < tolerance) break;
  }
  return q;
}

}  // namespace chorus::scoring
