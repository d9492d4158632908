#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/responders/builtin.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/selection/selector.hpp"

namespace chorus::orchestrator {

/// Reply used when not even the emergency fact responder has anything to say.
inline constexpr std::string_view kApology = "Sorry, I lost my train of thought. Could you say that again?";

struct TurnBudget {
  std::chrono::milliseconds response_deadline{7000};
  std::chrono::milliseconds ping_timeout{60000};

  /// Throws ValidationError unless 0 < response_deadline < ping_timeout.
  void validate() const;
};

struct EngineConfig {
  TurnBudget budget;
  std::uint64_t seed = 0;
  /// Consecutive failures tolerated before a worker is declared dead.
  int max_respawns = 3;

  nlohmann::json to_json() const;
  static EngineConfig from_json(const nlohmann::json& j);
};

/// One responder kind and how to instantiate it per conversation.
struct WorkerSpec {
  ResponderKind kind = ResponderKind::kFact;
  responders::ResponderFactory factory;
};

enum class WorkerHealth { kAlive, kSuspect, kDead };
std::string_view to_string(WorkerHealth h);

struct HealthEvent {
  ResponderKind kind = ResponderKind::kFact;
  /// "crashed", "ping_timeout", "revived", "dead", "late_reply" or "incident".
  std::string event;
  std::string detail;
  std::chrono::system_clock::time_point at;

  nlohmann::json to_json() const;
};

/// Candidates gathered for one bot turn and the choice made among them.
struct TurnRecord {
  std::string conversation_id;
  std::uint32_t turn_index = 0;  // index the bot reply takes in the history
  std::string user_message;  // empty for the opener
  std::vector<Candidate> candidates;  // in responder order
  std::optional<std::size_t> chosen;
  selection::Selection ranking;
  std::vector<ResponderKind> late;  // replies rejected after the deadline
  bool emergency = false;  // candidates came from the emergency responder or apology
  std::chrono::milliseconds latency{0};

  nlohmann::json to_json() const;
};

struct ConversationLog {
  std::string conversation_id;
  Article article;
  std::vector<Message> history;
  std::vector<TurnRecord> turns;
};

/// Result of start_conversation: greeting plus the opener candidates.
struct Opening {
  std::string conversation_id;
  std::string greeting;
  TurnRecord turn;  // candidates are the openers; ranking head is the suggested one
};

struct EngineStats {
  std::uint64_t conversations_started = 0;
  std::uint64_t turns = 0;
  std::uint64_t late_replies = 0;
  std::uint64_t revives = 0;
  std::uint64_t incidents = 0;
  std::map<ResponderKind, WorkerHealth> health;

  nlohmann::json to_json() const;
};

/// Fans each turn out to one worker per responder kind, collects scored
/// candidates until the deadline, selects a reply and supervises the workers.
/// All public operations are thread-safe; operations on one conversation are serialized.
class Engine {
 public:
  /// `emergency` builds the resident fact responder used when no candidate
  /// arrives in time; it may be empty.
  Engine(EngineConfig config, std::vector<WorkerSpec> workers, std::shared_ptr<const scoring::Scorer> scorer,
         std::shared_ptr<const selection::Selector> selector, responders::ResponderFactory emergency = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Broadcasts the wake-up and gathers the opener candidates. The greeting is
  /// appended to the history; the opener is not until commit(). Throws
  /// ValidationError for a duplicate id and std::runtime_error when every worker is dead.
  Opening start_conversation(const Article& article, std::optional<std::string> conversation_id = std::nullopt);

  /// Appends the user message, fans it out and ranks the candidates without committing a reply.
  TurnRecord propose(const std::string& conversation_id, const std::string& user_message);

  /// Appends candidate `index` of the pending turn as the bot reply.
  /// Throws ProtocolError when nothing is pending or the index is out of range.
  Message commit(const std::string& conversation_id, std::size_t index);

  /// propose() followed by commit() of the ranking head.
  TurnRecord handle_turn(const std::string& conversation_id, const std::string& user_message);

  /// Live-mode start: start_conversation() plus commit() of the suggested opener.
  Opening start_live(const Article& article, std::optional<std::string> conversation_id = std::nullopt);

  /// Closes the conversation and returns its log. Workers drop their instances.
  ConversationLog finish(const std::string& conversation_id);

  ConversationState snapshot(const std::string& conversation_id) const;
  ConversationLog log(const std::string& conversation_id) const;
  std::optional<TurnRecord> pending(const std::string& conversation_id) const;
  bool has_conversation(const std::string& conversation_id) const;

  std::vector<HealthEvent> health_events() const;
  EngineStats stats() const;
  WorkerHealth health(ResponderKind kind) const;
  const EngineConfig& config() const { return config_; }
  void set_health_listener(std::function<void(const HealthEvent&)> listener);

 private:
  struct Conversation;
  struct Handle;

  std::shared_ptr<Conversation> find(const std::string& id) const;
  /// Sends the snapshot to every live worker of `kinds` and waits for replies until the deadline.
  /// With `ping`, each worker's ping is queued behind its request so a stuck turn shows up as a missed ping.
  TurnRecord fan_out(Conversation& conv, const std::vector<ResponderKind>& kinds, const std::string& user_message,
                     bool ping = false);
  /// Emergency fact responder, then the apology, when `record` has no candidate.
  void fill_empty(Conversation& conv, TurnRecord& record);
  TurnRecord propose_locked(Conversation& conv, const std::string& user_message);
  Message commit_locked(Conversation& conv, std::size_t index);
  void post_pings_locked();  // requires workers_mu_
  void supervise_loop();
  void check_worker(Handle& h, std::chrono::steady_clock::time_point now);
  void respawn(Handle& h, const std::string& reason);
  void emit(ResponderKind kind, std::string event, std::string detail = {});

  EngineConfig config_;
  std::shared_ptr<const scoring::Scorer> scorer_;
  std::shared_ptr<const selection::Selector> selector_;
  responders::ResponderFactory emergency_;

  mutable std::mutex workers_mu_;
  std::vector<std::unique_ptr<Handle>> workers_;

  mutable std::mutex conversations_mu_;
  std::map<std::string, std::shared_ptr<Conversation>> conversations_;
  std::uint64_t next_conversation_ = 1;

  std::vector<std::unique_ptr<Handle>> retired_;  // replaced workers still finishing a task

  mutable std::mutex events_mu_;
  std::vector<HealthEvent> events_;
  std::function<void(const HealthEvent&)> listener_;
  EngineStats stats_;

  std::atomic<bool> stopping_{false};
  std::mutex supervisor_mu_;
  std::condition_variable supervisor_cv_;
  std::thread supervisor_;
};

/// Worker specs for the enabled built-in responder kinds, in enum order.
std::vector<WorkerSpec> builtin_workers(const std::shared_ptr<const responders::ResponderPack>& pack,
                                        const std::set<ResponderKind>& enabled);
/// Worker specs for all nine built-in responder kinds.
std::vector<WorkerSpec> builtin_workers(const std::shared_ptr<const responders::ResponderPack>& pack);

}  // namespace chorus::orchestrator
