#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "chorus/service/sessions.hpp"

namespace chorus::service {

/// JSON-over-HTTP front end for a SessionManager.
///
///   GET  /health                       liveness
///   POST /sessions                     {"mode": "live"|"collect", "article_id"?}   -> 201
///   GET  /sessions/{id}                transcript and offered candidates
///   POST /sessions/{id}/messages       {"text"}
///   POST /sessions/{id}/select         {"candidate_id", "reply"?}   collect mode only
///   POST /sessions/{id}/finish         {"rating": 1..5}
///   GET  /sessions/{id}/events?after=n server-sent events, closes after "finished"
///   GET  /stats                        session and engine counters
///
/// Errors are {"error": message} with 400 for invalid input, 404 for unknown
/// sessions or articles, 409 for out-of-order calls and 503 when no article is available.
class HttpServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    /// Idle interval between keep-alive comments on event streams.
    std::chrono::milliseconds event_heartbeat{1000};
  };

  HttpServer(std::shared_ptr<SessionManager> sessions, Options options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws std::runtime_error when the address cannot be bound.
  std::uint16_t start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chorus::service
