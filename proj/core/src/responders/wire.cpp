#include "chorus/responders/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace chorus::responders {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

enum class ReadStatus { kLine, kTimeout, kClosed };

// Reads one '\n'-terminated line into `line`, buffering any surplus.
ReadStatus read_line(int fd, std::string& buffer, std::string& line, std::optional<Clock::time_point> deadline) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return ReadStatus::kLine;
    }
    int wait_ms = -1;
    if (deadline) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now()).count();
      if (left <= 0) return ReadStatus::kTimeout;
      wait_ms = static_cast<int>(left);
    }
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, wait_ms);
    if (r < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::kClosed;
    }
    if (r == 0) return ReadStatus::kTimeout;
    char chunk[4096];
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return ReadStatus::kClosed;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

json reply(const json& request, ResponderKind kind, const std::optional<std::string>& text) {
  json out{{"id", request.value("id", std::uint64_t{0})}, {"model", std::string(to_string(kind))}};
  out["text"] = text ? json(*text) : json(nullptr);
  return out;
}

json error_reply(const json& request, const std::string& message) {
  const auto id = request.is_object() ? request.value("id", std::uint64_t{0}) : std::uint64_t{0};
  return json{{"id", id}, {"error", message}};
}

}  // namespace

json wakeup_request(std::uint64_t id, const std::string& conversation_id, const Article& article) {
  return json{{"id", id},
              {"type", "wakeup"},
              {"conversation_id", conversation_id},
              {"article", {{"id", article.id}, {"text", article.text}}}};
}

json respond_request(std::uint64_t id, const ConversationState& state) {
  json context = json::array();
  for (const auto& m : state.history) {
    context.push_back({{"speaker", std::string(to_string(m.speaker))}, {"text", m.text}});
  }
  return json{{"id", id}, {"type", "respond"}, {"conversation_id", state.conversation_id}, {"context", context}};
}

// ---------------------------------------------------------------- server

GeneratorServer::GeneratorServer(ResponderKind kind, ResponderFactory factory, Options options)
    : kind_(kind), factory_(std::move(factory)), options_(std::move(options)) {}

GeneratorServer::~GeneratorServer() { stop(); }

void GeneratorServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ValidationError("generator host must be an IPv4 address: " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on " + options_.host + ":" + std::to_string(options_.port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void GeneratorServer::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    for (int fd : connection_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(connections_);
  }
  for (auto& t : threads) t.join();
}

void GeneratorServer::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int yes = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
    std::lock_guard lock(mu_);
    connection_fds_.push_back(fd);
    connections_.emplace_back([this, fd] { serve(fd); });
  }
}

void GeneratorServer::serve(int fd) {
  std::string buffer;
  std::string line;
  while (running_ && read_line(fd, buffer, line, std::nullopt) == ReadStatus::kLine) {
    json out;
    try {
      out = handle(json::parse(line));
    } catch (const json::exception& e) {
      out = error_reply(json(), std::string("malformed request: ") + e.what());
    }
    if (!send_all(fd, out.dump() + "\n")) break;
  }
  {
    std::lock_guard lock(mu_);
    std::erase(connection_fds_, fd);
  }
  ::close(fd);
}

json GeneratorServer::handle(const json& request) {
  try {
    if (!request.is_object()) return error_reply(request, "request must be an object");
    const auto type = request.at("type").get<std::string>();
    if (type == "ping") return reply(request, kind_, std::string("pong"));
    const auto conv = request.at("conversation_id").get<std::string>();
    if (type == "wakeup") {
      const auto& a = request.at("article");
      auto session = std::make_shared<Session>();
      session->article = Article::from_text(a.value("id", std::string()), a.at("text").get<std::string>());
      session->responder = factory_(conv, derive_seed(options_.seed, conv, kind_));
      session->responder->wake_up(session->article);
      std::lock_guard lock(mu_);
      sessions_[conv] = std::move(session);
      return reply(request, kind_, std::nullopt);
    }
    if (type == "respond") {
      std::shared_ptr<Session> session;
      {
        std::lock_guard lock(mu_);
        const auto it = sessions_.find(conv);
        if (it == sessions_.end()) return error_reply(request, "unknown conversation " + conv);
        session = it->second;
      }
      ConversationState state;
      state.conversation_id = conv;
      state.article = session->article;
      for (const auto& m : request.at("context")) {
        state.append(speaker_from_string(m.at("speaker").get<std::string>()), m.at("text").get<std::string>());
      }
      if (options_.respond_delay.count() > 0) std::this_thread::sleep_for(options_.respond_delay);
      std::lock_guard lock(session->mu);
      return reply(request, kind_, session->responder->respond(state));
    }
    return error_reply(request, "unknown request type " + type);
  } catch (const std::exception& e) {
    return error_reply(request, e.what());
  }
}

// ---------------------------------------------------------------- bridge

BridgeResponder::BridgeResponder(ResponderKind kind, std::string conversation_id, std::string host,
                                 std::uint16_t port, std::chrono::milliseconds timeout, HealthCallback on_health)
    : kind_(kind),
      host_(std::move(host)),
      port_(port),
      timeout_(timeout),
      on_health_(std::move(on_health)),
      conversation_id_(std::move(conversation_id)) {}

BridgeResponder::~BridgeResponder() { disconnect(); }

void BridgeResponder::report(const std::string& event) {
  if (on_health_) on_health_(kind_, event);
}

void BridgeResponder::disconnect() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

bool BridgeResponder::ensure_connected() {
  if (fd_ >= 0) return true;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || res == nullptr) {
    report("connect_failed");
    return false;
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    if (fd >= 0) ::close(fd);
    report("connect_failed");
    return false;
  }
  const int yes = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
  fd_ = fd;
  remote_awake_ = false;
  return true;
}

std::optional<json> BridgeResponder::call(const json& request) {
  if (!ensure_connected()) return std::nullopt;
  const auto deadline = Clock::now() + timeout_;
  if (!send_all(fd_, request.dump() + "\n")) {
    disconnect();
    report("connection_lost");
    return std::nullopt;
  }
  const auto id = request.at("id").get<std::uint64_t>();
  std::string line;
  for (;;) {
    switch (read_line(fd_, buffer_, line, deadline)) {
      case ReadStatus::kTimeout:
        // The late reply would desynchronize the stream; start fresh next call.
        disconnect();
        report("timeout");
        return std::nullopt;
      case ReadStatus::kClosed:
        disconnect();
        report("connection_lost");
        return std::nullopt;
      case ReadStatus::kLine:
        break;
    }
    json msg = json::parse(line, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
      disconnect();
      report("malformed_reply");
      return std::nullopt;
    }
    if (msg.value("id", std::uint64_t{0}) != id) continue;  // stale reply
    if (msg.contains("error")) {
      report("error: " + msg["error"].get<std::string>());
      return std::nullopt;
    }
    return msg;
  }
}

void BridgeResponder::wake_up(const Article& article) {
  article_ = article;
  remote_awake_ = call(wakeup_request(next_id_++, conversation_id_, article)).has_value();
}

std::optional<std::string> BridgeResponder::respond(const ConversationState& state) {
  if (!article_) throw ProtocolError("respond before wake_up");
  if (!remote_awake_ || fd_ < 0) {
    remote_awake_ = call(wakeup_request(next_id_++, conversation_id_, *article_)).has_value();
    if (!remote_awake_) return std::nullopt;
  }
  const auto msg = call(respond_request(next_id_++, state));
  if (!msg) return std::nullopt;
  const auto& text = (*msg)["text"];
  if (!text.is_string() || text.get<std::string>().empty()) return std::nullopt;
  return text.get<std::string>();
}

ResponderFactory make_bridge_factory(ResponderKind kind, std::string host, std::uint16_t port,
                                     std::chrono::milliseconds timeout, HealthCallback on_health) {
  return [=](const std::string& conversation_id, std::uint64_t) -> std::unique_ptr<Responder> {
    return std::make_unique<BridgeResponder>(kind, conversation_id, host, port, timeout, on_health);
  };
}

}  // namespace chorus::responders
