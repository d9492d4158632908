#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/orchestrator/engine.hpp"

namespace chorus::orchestrator {

/// Produces user messages from a fixed script pool with a private random stream.
class ScriptedUser {
 public:
  /// A non-empty `tag` is appended to every message so replies can be traced to their conversation.
  ScriptedUser(std::uint64_t seed, std::string tag = {});

  std::string next(const ConversationState& state);
  const std::string& tag() const { return tag_; }

  static const std::vector<std::string>& script();

 private:
  std::mt19937_64 rng_;
  std::string tag_;
};

struct SimulationOptions {
  int conversations = 4;
  int turns = 5;  // user messages per conversation
  int concurrency = 4;  // conversations driven at once
  std::uint64_t seed = 0;
  bool tag_messages = true;
};

struct SimulationReport {
  std::vector<ConversationLog> logs;
  std::size_t turns = 0;
  std::chrono::milliseconds max_latency{0};
  double mean_latency_ms = 0.0;
  std::vector<std::size_t> candidate_counts;  // index = count, value = turns
  /// Conversations whose candidates mention another conversation's tag.
  std::vector<std::string> contaminated;

  nlohmann::json to_json() const;
};

/// Drives live conversations over `articles` (chosen round-robin) with scripted users.
SimulationReport simulate(Engine& engine, std::span<const Article> articles, const SimulationOptions& options);

}  // namespace chorus::orchestrator
