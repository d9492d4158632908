#include <doctest.h>

#include <set>
#include <thread>

#include "chorus/data/dataset.hpp"
#include "chorus/service/http.hpp"
#include "chorus/service/runtime.hpp"
#include "support.hpp"

// after Eigen: <resolv.h> defines a _res macro that clashes with Eigen internals
#include <httplib.h>

using namespace chorus;
using namespace chorus::service;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

ServiceConfig base_config() {
  ServiceConfig c;
  c.data_dir = testing::data_dir();
  c.port = 0;
  c.engine.budget.response_deadline = 2000ms;
  c.engine.budget.ping_timeout = 10000ms;
  c.seed = 11;
  return c;
}

std::unique_ptr<Runtime> runtime(ServiceConfig c = base_config()) { return Runtime::build(c); }

// Plays one collect turn: picks the first offered candidate and replies.
json pick_first(SessionManager& m, const std::string& id, const json& offered, const std::string& reply) {
  return m.select(id, offered.at(0).at("id").get<std::string>(), reply);
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("config parses, resolves paths and rejects bad input") {
    const json j = {{"port", 0},
                    {"data_dir", "pack"},
                    {"dataset_out", "/abs/out.ndjson"},
                    {"enabled", {"fact", "topic"}},
                    {"generators", {{"hred_twitter", "localhost:9001"}}},
                    {"engine", {{"response_deadline_ms", 500}, {"ping_timeout_ms", 4000}}},
                    {"policy", {{"kind", "argmax"}}},
                    {"reveal_models", true}};
    const auto c = ServiceConfig::from_json(j, "/base");
    CHECK(c.data_dir == std::filesystem::path("/base/pack"));
    CHECK(c.dataset_out == std::filesystem::path("/abs/out.ndjson"));
    CHECK(c.enabled.size() == 2);
    CHECK(c.generators.at(ResponderKind::kHredTwitter).port == 9001);
    CHECK(c.engine.budget.response_deadline == 500ms);
    CHECK(c.policy.kind == selection::PolicyKind::kArgmax);
    CHECK(ServiceConfig::from_json(c.to_json()).to_json() == c.to_json());
    CHECK_THROWS_AS(ServiceConfig::from_json({{"data_dir", "x"}, {"colour", 1}}), ValidationError);
    CHECK_THROWS_AS(ServiceConfig::from_json(json::object()), ValidationError);
    CHECK_THROWS_AS(ServiceConfig::from_json({{"data_dir", "x"}, {"port", "eighty"}}), ValidationError);
    CHECK_THROWS_AS(ServiceConfig::from_json({{"data_dir", "x"}, {"generators", {{"fact", "nohost"}}}}), ValidationError);
    CHECK_THROWS_AS(ServiceConfig::from_json({{"data_dir", "x"}, {"enabled", {"oracle"}}}), ValidationError);
  }

  TEST_CASE("article corpus loads the shipped articles") {
    const auto corpus = ArticleCorpus::load(testing::data_dir() / "articles");
    CHECK(corpus.size() == 8);
    CHECK(corpus.get("world_cup").text.size() > 20);
    CHECK_THROWS_AS(corpus.get("missing"), NotFoundError);
    CHECK_THROWS_AS(ArticleCorpus::load(testing::data_dir() / "nope"), ValidationError);
  }

  TEST_CASE("live sessions get one opener and direct replies") {
    auto rt = runtime();
    auto& m = *rt->sessions;
    const auto created = m.create(SessionMode::kLive, std::string("world_cup"));
    CHECK(created.at("article").at("id") == "world_cup");
    CHECK_FALSE(created.at("reply").get<std::string>().empty());
    CHECK_FALSE(created.contains("candidates"));
    const auto id = created.at("session_id").get<std::string>();
    const auto reply = m.post_message(id, "What's your name ?");
    CHECK(reply.at("reply") == "My name is RLLChatbot.");
    CHECK_FALSE(reply.contains("model"));
    const auto view = m.get(id);
    CHECK(view.at("history").size() == 4);  // greeting, opener, question, answer
    CHECK(view.at("interactions") == 1);
    CHECK_THROWS_AS(m.select(id, "c-0"), ProtocolError);
    CHECK_THROWS_AS(m.post_message(id, "   "), ValidationError);
    CHECK(m.finish(id, 4).at("records") == 0);
    CHECK_THROWS_AS(m.post_message(id, "again"), ProtocolError);
    CHECK(m.get(id).at("status") == "finished");
  }

  TEST_CASE("collect sessions enforce the selection protocol and export transitions") {
    auto config = base_config();
    const auto out = testing::scratch_dir("service_collect") / "collected.ndjson";
    config.dataset_out = out;
    config.reveal_models = true;
    auto rt = runtime(config);
    auto& m = *rt->sessions;

    const auto created = m.create(SessionMode::kCollect);
    const auto id = created.at("session_id").get<std::string>();
    const auto openers = created.at("candidates");
    CHECK(openers.size() == 2);
    CHECK(openers.at(0).contains("model"));
    CHECK(openers.at(0).at("id") != openers.at(1).at("id"));

    CHECK_THROWS_AS(m.post_message(id, "hi"), ProtocolError);
    CHECK_THROWS_AS(m.select(id, "c-unknown"), ValidationError);
    auto step = pick_first(m, id, openers, "What's your name ?");
    CHECK(step.at("interactions") == 1);
    CHECK_THROWS_AS(m.select(id, openers.at(0).at("id").get<std::string>()), ProtocolError);
    CHECK_THROWS_AS(m.select(id, openers.at(1).at("id").get<std::string>()), ProtocolError);

    std::set<std::string> seen;
    for (const auto& c : openers) seen.insert(c.at("id").get<std::string>());
    for (int turn = 0; turn < 3; ++turn) {
      const auto offered = step.at("candidates");
      CHECK(offered.size() >= 2);
      for (const auto& c : offered) CHECK(seen.insert(c.at("id").get<std::string>()).second);
      CHECK(m.get(id).at("candidates") == offered);
      step = pick_first(m, id, offered, "Tell me more about the teams please");
    }
    CHECK(step.at("interactions") == 4);
    CHECK_FALSE(step.at("can_finish").get<bool>());
    CHECK_THROWS_AS(m.finish(id, 5), ProtocolError);
    step = pick_first(m, id, step.at("candidates"), "Interesting");
    CHECK(step.at("can_finish").get<bool>());
    CHECK_THROWS_AS(m.finish(id, 6), ValidationError);

    const auto done = m.finish(id, 5);
    CHECK(done.at("records").get<int>() > 5);
    CHECK_THROWS_AS(m.finish(id, 5), ProtocolError);

    const auto records = data::read_dataset(out);
    CHECK(records.size() == done.at("records").get<std::size_t>());
    int positives = 0;
    for (const auto& r : records) {
      positives += r.vote;
      if (r.vote == 1) CHECK(r.reward == doctest::Approx(1.0));
    }
    CHECK(positives == 5);

    // a second finished session appends to the same file
    const auto second = m.create(SessionMode::kCollect);
    const auto sid = second.at("session_id").get<std::string>();
    step = pick_first(m, sid, second.at("candidates"), "hello");
    for (int turn = 0; turn < 3; ++turn) step = pick_first(m, sid, step.at("candidates"), "go on");
    const auto last = m.select(sid, step.at("candidates").at(0).at("id").get<std::string>());
    CHECK_FALSE(last.contains("candidates"));
    const auto more = m.finish(sid, 1).at("records").get<std::size_t>();
    CHECK(data::read_dataset(out).size() == records.size() + more);
    CHECK(m.stats().at("exported_records") == records.size() + more);
  }

  TEST_CASE("session ids are distinct and unknown ids are rejected") {
    auto rt = runtime();
    auto& m = *rt->sessions;
    std::set<std::string> ids;
    for (int i = 0; i < 6; ++i) ids.insert(m.create(SessionMode::kLive).at("session_id").get<std::string>());
    CHECK(ids.size() == 6);
    for (const auto& id : ids) CHECK(id.size() == 2 + 32);
    CHECK_THROWS_AS(m.get("s-nope"), NotFoundError);
    CHECK_THROWS_AS(m.create(SessionMode::kLive, std::string("missing")), NotFoundError);
    CHECK_THROWS_AS(session_mode_from_string("party"), ValidationError);
    CHECK(m.stats().at("sessions") == 6);
    CHECK(m.stats().at("live") == 6);
  }

  TEST_CASE("events accumulate per session") {
    auto rt = runtime();
    auto& m = *rt->sessions;
    const auto id = m.create(SessionMode::kLive).at("session_id").get<std::string>();
    m.post_message(id, "hello there");
    auto events = m.events(id, 0, 0ms);
    REQUIRE(events.size() == 2);
    CHECK(events[0].type == "created");
    CHECK(events[1].type == "reply");
    CHECK(events[1].seq == 2);
    CHECK(m.events(id, 2, 10ms).empty());
    std::thread later([&] {
      std::this_thread::sleep_for(50ms);
      m.finish(id, 3);
    });
    events = m.events(id, 2, 5000ms);
    later.join();
    REQUIRE(events.size() == 1);
    CHECK(events[0].type == "finished");
  }

  TEST_CASE("http routes round-trip and map errors to status codes") {
    auto rt = runtime();
    HttpServer::Options opt;
    opt.port = 0;
    opt.event_heartbeat = 100ms;
    HttpServer server(rt->sessions, opt);
    const auto port = server.start();
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    auto created = client.Post("/sessions", R"({"mode":"collect","article_id":"tibet_plateau"})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
    const auto session = json::parse(created->body);
    const auto id = session.at("session_id").get<std::string>();
    const auto first = session.at("candidates").at(0).at("id").get<std::string>();

    auto early = client.Post("/sessions/" + id + "/messages", R"({"text":"hi"})", "application/json");
    REQUIRE(early);
    CHECK(early->status == 409);
    CHECK(json::parse(early->body).contains("error"));

    const json pick = {{"candidate_id", first}, {"reply", "Where is it?"}};
    auto selected = client.Post("/sessions/" + id + "/select", pick.dump(), "application/json");
    REQUIRE(selected);
    CHECK(selected->status == 200);
    CHECK(json::parse(selected->body).at("candidates").size() >= 2);

    auto replay = client.Post("/sessions/" + id + "/select", pick.dump(), "application/json");
    REQUIRE(replay);
    CHECK(replay->status == 409);

    CHECK(client.Post("/sessions/" + id + "/select", "not json", "application/json")->status == 400);
    CHECK(client.Post("/sessions/" + id + "/finish", R"({"rating":5})", "application/json")->status == 409);
    CHECK(client.Post("/sessions/" + id + "/finish", R"({"rating":"five"})", "application/json")->status == 400);
    CHECK(client.Get("/sessions/s-unknown")->status == 404);
    CHECK(client.Post("/sessions", R"({"mode":"party"})", "application/json")->status == 400);

    auto view = client.Get("/sessions/" + id);
    REQUIRE(view);
    CHECK(json::parse(view->body).at("interactions") == 1);

    auto live = json::parse(client.Post("/sessions", R"({"mode":"live"})", "application/json")->body);
    const auto live_id = live.at("session_id").get<std::string>();
    auto answer = client.Post("/sessions/" + live_id + "/messages", R"({"text":"What's your name ?"})", "application/json");
    REQUIRE(answer);
    CHECK(json::parse(answer->body).at("reply") == "My name is RLLChatbot.");
    CHECK(client.Post("/sessions/" + live_id + "/finish", R"({"rating":2})", "application/json")->status == 200);

    // the finished session's stream replays every event and closes
    auto stream = client.Get("/sessions/" + live_id + "/events");
    REQUIRE(stream);
    CHECK(stream->status == 200);
    CHECK(stream->get_header_value("Content-Type") == "text/event-stream");
    CHECK(stream->body.find("event: created") != std::string::npos);
    CHECK(stream->body.find("event: reply") != std::string::npos);
    CHECK(stream->body.find("event: finished") != std::string::npos);
    auto tail = client.Get("/sessions/" + live_id + "/events?after=2");
    REQUIRE(tail);
    CHECK(tail->body.find("event: created") == std::string::npos);
    CHECK(tail->body.find("id: 3") != std::string::npos);

    auto stats = client.Get("/stats");
    REQUIRE(stats);
    const auto s = json::parse(stats->body);
    CHECK(s.at("sessions") == 2);
    CHECK(s.at("finished") == 1);
    CHECK(s.at("engine").contains("turns"));
    server.stop();
  }

  TEST_CASE("an empty corpus is reported as unavailable") {
    auto config = base_config();
    config.corpus_dir = testing::scratch_dir("service_empty_corpus");
    auto rt = runtime(config);
    CHECK_THROWS_AS(rt->sessions->create(SessionMode::kLive), std::runtime_error);
    HttpServer::Options opt;
    opt.port = 0;
    HttpServer server(rt->sessions, opt);
    httplib::Client client("127.0.0.1", server.start());
    auto res = client.Post("/sessions", "{}", "application/json");
    REQUIRE(res);
    CHECK(res->status == 503);
  }
}
