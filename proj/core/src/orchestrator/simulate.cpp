#include "chorus/orchestrator/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace chorus::orchestrator {

ScriptedUser::ScriptedUser(std::uint64_t seed, std::string tag) : rng_(seed), tag_(std::move(tag)) {}

const std::vector<std::string>& ScriptedUser::script() {
  static const std::vector<std::string> lines = {
      "What's your name ?",
      "What is the article about?",
      "ok",
      "I think this is a really interesting story",
      "Why did that happen?",
      "Tell me more about it please",
      "I have no idea",
      "How are you ?",
      "I did not know that at all",
      "yes",
      "Where did this take place?",
      "That sounds surprising to me honestly",
  };
  return lines;
}

std::string ScriptedUser::next(const ConversationState&) {
  std::uniform_int_distribution<std::size_t> pick(0, script().size() - 1);
  std::string line = script()[pick(rng_)];
  if (!tag_.empty()) line += " " + tag_;
  return line;
}

nlohmann::json SimulationReport::to_json() const {
  return {{"conversations", logs.size()},
          {"turns", turns},
          {"max_latency_ms", max_latency.count()},
          {"mean_latency_ms", mean_latency_ms},
          {"candidate_counts", candidate_counts},
          {"contaminated", contaminated}};
}

SimulationReport simulate(Engine& engine, std::span<const Article> articles, const SimulationOptions& options) {
  if (articles.empty()) throw ValidationError("simulation needs at least one article");
  if (options.conversations < 1 || options.turns < 1 || options.concurrency < 1) {
    throw ValidationError("simulation sizes must be positive");
  }
  const auto n = static_cast<std::size_t>(options.conversations);
  std::vector<ConversationLog> logs(n);
  std::vector<std::string> tags(n);
  std::vector<std::string> errors;
  std::mutex errors_mu;
  std::atomic<std::size_t> next{0};

  auto drive = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      tags[i] = options.tag_messages ? "[u" + std::to_string(i) + "]" : std::string();
      try {
        ScriptedUser user(options.seed + i, tags[i]);
        const auto id = "sim-" + std::to_string(options.seed) + "-" + std::to_string(i);
        engine.start_live(articles[i % articles.size()], id);
        for (int t = 0; t < options.turns; ++t) engine.handle_turn(id, user.next(engine.snapshot(id)));
        logs[i] = engine.finish(id);
      } catch (const std::exception& e) {
        std::lock_guard lock(errors_mu);
        errors.push_back(e.what());
      }
    }
  };
  std::vector<std::thread> pool;
  const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(options.concurrency));
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drive);
  for (auto& t : pool) t.join();
  if (!errors.empty()) throw std::runtime_error("simulation failed: " + errors.front());

  SimulationReport report;
  double total_ms = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    bool dirty = false;
    for (const auto& turn : logs[i].turns) {
      ++report.turns;
      report.max_latency = std::max(report.max_latency, turn.latency);
      total_ms += static_cast<double>(turn.latency.count());
      if (report.candidate_counts.size() <= turn.candidates.size()) report.candidate_counts.resize(turn.candidates.size() + 1);
      ++report.candidate_counts[turn.candidates.size()];
      if (turn.conversation_id != logs[i].conversation_id) dirty = true;
      for (const auto& c : turn.candidates) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i && !tags[j].empty() && c.text.find(tags[j]) != std::string::npos) dirty = true;
        }
      }
    }
    if (dirty) report.contaminated.push_back(logs[i].conversation_id);
  }
  report.mean_latency_ms = report.turns ? total_ms / static_cast<double>(report.turns) : 0.0;
  report.logs = std::move(logs);
  return report;
}

}  // namespace chorus::orchestrator
