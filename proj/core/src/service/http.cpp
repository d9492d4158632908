#include "chorus/service/http.hpp"

#include <atomic>
#include <thread>

#include <httplib.h>

namespace chorus::service {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      send_json(res, 404, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const ProtocolError& e) {
      send_json(res, 409, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 503, {{"error", e.what()}});
    }
  };
}

std::string sse_frame(const SessionEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<SessionManager> sessions;
  Options options;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  int port = -1;

  void routes();
  void bind();
};

void HttpServer::Impl::routes() {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                const auto mode = session_mode_from_string(body.value("mode", std::string("live")));
                std::optional<std::string> article;
                if (body.contains("article_id") && !body.at("article_id").is_null()) {
                  article = field<std::string>(body, "article_id");
                }
                send_json(res, 201, sessions->create(mode, article));
              }));

  server.Get("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions->get(req.path_params.at("id")));
             }));

  server.Post("/sessions/:id/messages", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send_json(res, 200, sessions->post_message(req.path_params.at("id"), field<std::string>(body, "text")));
              }));

  server.Post("/sessions/:id/select", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                std::optional<std::string> reply;
                if (body.contains("reply") && !body.at("reply").is_null()) reply = field<std::string>(body, "reply");
                send_json(res, 200,
                          sessions->select(req.path_params.at("id"), field<std::string>(body, "candidate_id"), reply));
              }));

  server.Post("/sessions/:id/finish", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto body = parse_body(req);
                send_json(res, 200, sessions->finish(req.path_params.at("id"), field<int>(body, "rating")));
              }));

  server.Get("/stats", guarded([this](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, sessions->stats());
             }));

  server.Get("/sessions/:id/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.path_params.at("id");
               std::uint64_t after = 0;
               if (req.has_param("after")) {
                 try {
                   after = std::stoull(req.get_param_value("after"));
                 } catch (const std::exception&) {
                   throw ValidationError("'after' must be a non-negative integer");
                 }
               }
               sessions->get(id);  // 404 before the stream starts
               auto cursor = std::make_shared<std::uint64_t>(after);
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
                     if (stopping) {
                       sink.done();
                       return true;
                     }
                     const auto batch = sessions->events(id, *cursor, options.event_heartbeat);
                     if (batch.empty()) {
                       const std::string beat = ": keep-alive\n\n";
                       return sink.write(beat.data(), beat.size());
                     }
                     bool done = false;
                     for (const auto& e : batch) {
                       const auto frame = sse_frame(e);
                       if (!sink.write(frame.data(), frame.size())) return false;
                       *cursor = e.seq;
                       done = done || e.type == "finished";
                     }
                     if (done) sink.done();
                     return true;
                   });
             }));
}

void HttpServer::Impl::bind() {
  if (port >= 0) throw std::runtime_error("server already started");
  if (options.port == 0) {
    port = server.bind_to_any_port(options.host);
  } else {
    port = server.bind_to_port(options.host, options.port) ? options.port : -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + options.host + ":" + std::to_string(options.port));
  }
}

HttpServer::HttpServer(std::shared_ptr<SessionManager> sessions, Options options)
    : impl_(std::make_unique<Impl>()) {
  if (!sessions) throw ValidationError("http server needs a session manager");
  impl_->sessions = std::move(sessions);
  impl_->options = std::move(options);
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::start() {
  impl_->bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return static_cast<std::uint16_t>(impl_->port);
}

void HttpServer::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::uint16_t HttpServer::port() const { return impl_->port < 0 ? 0 : static_cast<std::uint16_t>(impl_->port); }

}  // namespace chorus::service
