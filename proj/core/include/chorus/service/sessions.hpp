#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/orchestrator/engine.hpp"

namespace chorus::service {

/// Raised for an unknown session id.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plain-text articles, one file per article; the id is the file stem.
class ArticleCorpus {
 public:
  ArticleCorpus() = default;
  explicit ArticleCorpus(std::vector<Article> articles);
  /// Reads every `*.txt` file under `dir`, sorted by name. Blank files are skipped.
  static ArticleCorpus load(const std::filesystem::path& dir);

  bool empty() const { return articles_.empty(); }
  std::size_t size() const { return articles_.size(); }
  const std::vector<Article>& articles() const { return articles_; }
  /// Throws NotFoundError for an unknown id.
  const Article& get(const std::string& id) const;

 private:
  std::vector<Article> articles_;
};

enum class SessionMode { kLive, kCollect };
std::string_view to_string(SessionMode mode);
/// Throws ValidationError for anything but "live" or "collect".
SessionMode session_mode_from_string(std::string_view name);

struct SessionOptions {
  /// Selections required before a collect session may finish.
  int min_interactions = 5;
  /// Include responder names and scores in candidate lists.
  bool reveal_models = false;
  /// Finished collect sessions are appended here as transitions; empty disables export.
  std::filesystem::path dataset_out;
  std::uint64_t seed = 0;
};

struct SessionEvent {
  std::uint64_t seq = 0;
  std::string type;  // "created", "candidates", "reply", "selected", "finished"
  nlohmann::json data;
};

/// Session lifecycle over an engine. Message bodies are JSON objects; the
/// schema is documented in the README. Thread-safe; each session's
/// operations are serialized.
///
/// Errors: ValidationError for bad input, ProtocolError for out-of-order calls,
/// NotFoundError for unknown sessions, std::runtime_error for an empty corpus.
class SessionManager {
 public:
  SessionManager(std::shared_ptr<orchestrator::Engine> engine, ArticleCorpus corpus, SessionOptions options = {});

  /// Picks the requested or a random article and starts the conversation.
  /// Live sessions get one opener, collect sessions the opener candidates.
  nlohmann::json create(SessionMode mode, const std::optional<std::string>& article_id = std::nullopt);
  nlohmann::json get(const std::string& session_id) const;
  /// Live: the bot reply. Collect: the next candidate list; requires the previous selection.
  nlohmann::json post_message(const std::string& session_id, const std::string& text);
  /// Collect only: records the choice and, with a reply, fans out the next turn.
  nlohmann::json select(const std::string& session_id, const std::string& candidate_id,
                        const std::optional<std::string>& reply = std::nullopt);
  /// Stores the 1..5 rating, exports collect transitions and closes the session.
  nlohmann::json finish(const std::string& session_id, int rating);
  nlohmann::json stats() const;

  /// Events with seq > `after`, waiting up to `wait` for one to appear.
  std::vector<SessionEvent> events(const std::string& session_id, std::uint64_t after,
                                   std::chrono::milliseconds wait) const;
  bool finished(const std::string& session_id) const;

  const orchestrator::Engine& engine() const { return *engine_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string random_id(std::string_view prefix);
  nlohmann::json present(Session& s, const orchestrator::TurnRecord& turn);
  void push_event(Session& s, std::string type, nlohmann::json data) const;
  nlohmann::json view(const Session& s) const;

  std::shared_ptr<orchestrator::Engine> engine_;
  ArticleCorpus corpus_;
  SessionOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_;
  mutable std::mutex export_mu_;
  std::uint64_t exported_records_ = 0;
};

}  // namespace chorus::service
