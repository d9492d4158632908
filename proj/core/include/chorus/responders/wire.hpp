#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "chorus/responders/responder.hpp"

namespace chorus::responders {

// Generator wire protocol: one JSON object per line over TCP.
//   request  {"id": n, "type": "wakeup", "conversation_id": s, "article": {"id": s, "text": s}}
//   request  {"id": n, "type": "respond", "conversation_id": s, "context": [{"speaker": s, "text": s}]}
//   request  {"id": n, "type": "ping"}
//   reply    {"id": n, "text": s | null, "model": s}   or   {"id": n, "error": s}

nlohmann::json wakeup_request(std::uint64_t id, const std::string& conversation_id, const Article& article);
nlohmann::json respond_request(std::uint64_t id, const ConversationState& state);

/// Hosts responders of one kind for remote callers. Each connection is served
/// by its own thread; conversations are keyed by id across connections.
class GeneratorServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks a free port
    std::chrono::milliseconds respond_delay{0};  // artificial latency, for timeout drills
    std::uint64_t seed = 0;
  };

  GeneratorServer(ResponderKind kind, ResponderFactory factory, Options options);
  ~GeneratorServer();
  GeneratorServer(const GeneratorServer&) = delete;
  GeneratorServer& operator=(const GeneratorServer&) = delete;

  /// Binds and starts accepting in the background.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }

  /// Handles one decoded request and returns the reply. Exposed for tests.
  nlohmann::json handle(const nlohmann::json& request);

 private:
  void accept_loop();
  void serve(int fd);

  ResponderKind kind_;
  ResponderFactory factory_;
  Options options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<std::thread> connections_;
  std::vector<int> connection_fds_;
  struct Session {
    std::mutex mu;
    std::unique_ptr<Responder> responder;
    Article article;
  };
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Health notifications raised by a bridge ("connect_failed", "timeout", ...).
using HealthCallback = std::function<void(ResponderKind, const std::string& event)>;

/// Responder that forwards to a GeneratorServer. Every failure (connection,
/// timeout, error reply) yields no candidate and a health event.
class BridgeResponder : public Responder {
 public:
  BridgeResponder(ResponderKind kind, std::string conversation_id, std::string host, std::uint16_t port,
                  std::chrono::milliseconds timeout, HealthCallback on_health = {});
  ~BridgeResponder() override;

  ResponderKind kind() const override { return kind_; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  std::optional<nlohmann::json> call(const nlohmann::json& request);
  bool ensure_connected();
  void disconnect();
  void report(const std::string& event);

  ResponderKind kind_;
  std::string host_;
  std::uint16_t port_;
  std::chrono::milliseconds timeout_;
  HealthCallback on_health_;
  int fd_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 1;
  std::string conversation_id_;
  std::optional<Article> article_;
  bool remote_awake_ = false;
};

/// Factory for bridges to a generator endpoint.
ResponderFactory make_bridge_factory(ResponderKind kind, std::string host, std::uint16_t port,
                                     std::chrono::milliseconds timeout, HealthCallback on_health = {});

}  // namespace chorus::responders
