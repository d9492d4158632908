#include <doctest.h>

#include <atomic>

#include "chorus/responders/builtin.hpp"
#include "chorus/responders/wire.hpp"
#include "support.hpp"

using namespace chorus;
using namespace chorus::responders;
using namespace std::chrono_literals;

namespace {

ResponderFactory echo_factory() {
  return [](const std::string&, std::uint64_t) { return std::make_unique<EchoStub>(ResponderKind::kHredReddit); };
}

ConversationState conversation(const std::string& id, const std::string& user) {
  ConversationState s;
  s.conversation_id = id;
  s.article = Article::from_text("a", "Some article.");
  s.append(Speaker::kBot, "Hello!");
  s.append(Speaker::kHuman, user);
  return s;
}

}  // namespace

TEST_SUITE("wire") {
  TEST_CASE("server handles requests directly") {
    GeneratorServer server(ResponderKind::kHredReddit, echo_factory(), {});
    const auto unknown = server.handle(respond_request(1, conversation("x", "hi")));
    CHECK(unknown.contains("error"));
    const auto woke = server.handle(wakeup_request(2, "x", Article::from_text("a", "Some article.")));
    CHECK(woke["id"] == 2);
    CHECK(woke["text"].is_null());
    const auto reply = server.handle(respond_request(3, conversation("x", "hi there")));
    CHECK(reply["text"] == "hi there");
    CHECK(reply["model"] == "hred_reddit");
    CHECK(server.handle(nlohmann::json{{"id", 4}, {"type", "bogus"}}).contains("error"));
  }

  TEST_CASE("bridge to an echo generator returns the last user message") {
    GeneratorServer server(ResponderKind::kHredReddit, echo_factory(), {});
    server.start();
    BridgeResponder bridge(ResponderKind::kHredReddit, "c1", "127.0.0.1", server.port(), 2000ms);
    bridge.wake_up(Article::from_text("a", "Some article."));
    CHECK(bridge.respond(conversation("c1", "say this back")) == "say this back");
    CHECK(bridge.respond(conversation("c1", "and this")) == "and this");
  }

  TEST_CASE("bridge gives up on a slow generator and recovers") {
    GeneratorServer::Options slow;
    slow.respond_delay = 300ms;
    GeneratorServer server(ResponderKind::kHredReddit, echo_factory(), slow);
    server.start();
    std::atomic<int> timeouts{0};
    BridgeResponder bridge(ResponderKind::kHredReddit, "c1", "127.0.0.1", server.port(), 50ms,
                           [&](ResponderKind, const std::string& e) { timeouts += e == "timeout" ? 1 : 0; });
    bridge.wake_up(Article::from_text("a", "Some article."));
    const auto start = std::chrono::steady_clock::now();
    CHECK_FALSE(bridge.respond(conversation("c1", "too slow")).has_value());
    CHECK(std::chrono::steady_clock::now() - start < 250ms);
    CHECK(timeouts == 1);
  }

  TEST_CASE("bridge reports connection failure as an absent candidate") {
    std::vector<std::string> events;
    BridgeResponder bridge(ResponderKind::kHredTwitter, "c1", "127.0.0.1", 1, 100ms,
                           [&](ResponderKind, const std::string& e) { events.push_back(e); });
    bridge.wake_up(Article::from_text("a", "Some article."));
    CHECK_FALSE(bridge.respond(conversation("c1", "anyone?")).has_value());
    REQUIRE_FALSE(events.empty());
    CHECK(events.front() == "connect_failed");
  }
}
