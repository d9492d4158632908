#include <algorithm>
#include <future>
#include <set>
#include <thread>

#include "chorus/orchestrator/engine.hpp"
#include "chorus/orchestrator/simulate.hpp"
#include "chorus/responders/builtin.hpp"
#include "chorus/selection/selector.hpp"
#include "harness.hpp"
#include "unit/doubles.hpp"
#include "unit/support.hpp"

namespace chorus::acceptance {
namespace {

using namespace std::chrono_literals;
using K = ResponderKind;

const Article& tibet() {
  static const Article a = Article::from_text("tibet", "Many Tibetan herders raise yaks on the high plateau.");
  return a;
}

ConversationState after_user(const std::string& message, std::uint32_t bored = 0) {
  ConversationState s;
  s.conversation_id = "c1";
  s.article = tibet();
  s.append(Speaker::kBot, std::string(selection::kGreeting));
  s.append(Speaker::kBot, "Did you know that yaks live on the plateau?");
  s.append(Speaker::kHuman, message);
  s.bored_counter = bored;
  return s;
}

struct Scenario {
  std::string name;
  ConversationState state;
  std::vector<Candidate> candidates;
  int rule;
  std::set<K> heads;
};

std::vector<Scenario> rule_suite() {
  const std::vector<Candidate> all = {
      {K::kHredTwitter, "that is cool", 0.5},          {K::kHredReddit, "i like yaks", 0.4},
      {K::kQuestionGen, "Do yaks climb?", 0.3},        {K::kQuestionAnswer, "They live on the plateau.", 0.6},
      {K::kTopic, "I think it is about animals.", 0.2}, {K::kFact, "Yaks have long hair.", 0.1},
      {K::kEntity, "I met a Tibetan once.", 0.35},     {K::kPattern, "Tell me more.", 0.45}};
  const std::string statement = "I think yaks are great animals";
  auto with_simple = all;
  with_simple.push_back({K::kSimpleAnswers, "My name is RLLChatbot.", 0.01});
  auto confident = all;
  confident[1].score = 0.9;
  auto low = all;
  for (auto& c : low) c.score = 0.1;
  return {
      {"simple answer", after_user("What's your name ?"), with_simple, 1, {K::kSimpleAnswers}},
      {"topic question", after_user("What is the article about?"), all, 2, {K::kTopic}},
      {"article question", after_user("Why are Tibetan herders raising yaks?"), all, 3, {K::kQuestionAnswer}},
      {"bored user", after_user("ok", 2), all, 4, {K::kQuestionGen, K::kFact, K::kEntity}},
      {"confident generic", after_user(statement), confident, 5, {K::kHredReddit}},
      {"other question", after_user("Why is the sky blue?"), all, 6,
       {K::kHredTwitter, K::kHredReddit, K::kPattern, K::kQuestionAnswer}},
      {"statement", after_user(statement), all, 7,
       {K::kHredTwitter, K::kHredReddit, K::kPattern, K::kQuestionGen, K::kEntity}},
      {"low scores", after_user(statement), low, 8, {K::kFact}},
  };
}

Outcome selection_rules() {
  const auto sel = selection::Selector::load(testing::data_dir(), testing::shipped_text());
  const auto& policy = sel->policy();
  Verdict v;
  v.expect(policy.high == 0.75 && policy.low == 0.25 && policy.bored_limit == 2, "thresholds 0.75 / 0.25, bored limit 2");
  auto run = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<int, std::vector<std::size_t>>> out;
    for (int rep = 0; rep < 20; ++rep) {
      for (const auto& sc : rule_suite()) {
        const auto s = sel->select(sc.state, sc.candidates, rng);
        out.emplace_back(s.rule, s.order);
      }
    }
    return out;
  };
  const auto suite = rule_suite();
  const auto first = run(17);
  std::set<int> fired;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto& sc = suite[i % suite.size()];
    const auto& [rule, order] = first[i];
    v.expect(rule == sc.rule, sc.name + " fires rule " + std::to_string(sc.rule));
    v.expect(sc.heads.contains(sc.candidates[order.front()].model), sc.name + " head responder");
    fired.insert(rule);
  }
  v.note("rules_fired", fired.size());
  v.expect(fired == std::set<int>{1, 2, 3, 4, 5, 6, 7, 8}, "rules 1 to 8 all fire");
  v.expect(run(17) == first, "identical rankings under the same seed");
  return v.outcome();
}

orchestrator::EngineConfig engine_config(std::chrono::milliseconds ping) {
  orchestrator::EngineConfig c;
  c.budget.response_deadline = 100ms;
  c.budget.ping_timeout = ping;
  c.seed = 5;
  return c;
}

std::unique_ptr<orchestrator::Engine> make_engine(testing::Rig& rig, std::chrono::milliseconds ping) {
  return std::make_unique<orchestrator::Engine>(
      engine_config(ping), rig.specs, std::make_shared<scoring::ConstantScorer>(0.5),
      selection::Selector::load(testing::data_dir(), testing::shipped_text()), responders::ResponderFactory{});
}

bool has_kind(const orchestrator::TurnRecord& r, K k) {
  return std::any_of(r.candidates.begin(), r.candidates.end(), [&](const Candidate& c) { return c.model == k; });
}

int count_events(const orchestrator::Engine& e, K kind, const std::string& event) {
  int n = 0;
  for (const auto& ev : e.health_events()) n += (ev.kind == kind && ev.event == event) ? 1 : 0;
  return n;
}

Outcome orchestrator_budget() {
  Verdict v;
  {
    testing::Rig rig;
    rig[K::kTopic].delay = 500ms;
    auto engine = make_engine(rig, 5000ms);
    const auto id = engine->start_live(tibet()).conversation_id;
    std::chrono::milliseconds worst{0};
    bool absent = true;
    for (int t = 0; t < 3; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto turn = engine->handle_turn(id, "what do yaks eat in winter");
      worst = std::max(worst, std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0));
      absent &= !has_kind(turn, K::kTopic) && turn.candidates.size() == 8;
    }
    v.note("slow_turn_ms", worst.count());
    v.expect(absent, "the 500 ms worker is missing from every turn");
    v.expect(worst <= 200ms, "turn latency at most 200 ms");
  }
  {
    testing::Rig rig;
    rig[K::kPattern].hangs = 1;
    auto engine = make_engine(rig, 300ms);
    const auto id = engine->start_live(tibet()).conversation_id;
    engine->handle_turn(id, "tell me something about yaks");
    const auto deadline = std::chrono::steady_clock::now() + 5s;
    while (count_events(*engine, K::kPattern, "revived") == 0 && std::chrono::steady_clock::now() < deadline) {
      std::this_thread::sleep_for(5ms);
    }
    std::this_thread::sleep_for(300ms);
    const auto next = engine->handle_turn(id, "and what else about yaks");
    std::this_thread::sleep_for(600ms);
    const int revives = count_events(*engine, K::kPattern, "revived");
    v.note("revives", revives);
    v.expect(revives == 1, "a hung worker is revived exactly once");
    v.expect(has_kind(next, K::kPattern), "the revived worker answers the next turn");
    rig[K::kPattern].release();
  }
  {
    testing::Rig rig;
    rig[K::kTopic].delay = 500ms;
    auto engine = make_engine(rig, 5000ms);
    const std::vector<Article> articles = {tibet(), Article::from_text("city", "The city was founded in 1906.")};
    orchestrator::SimulationOptions opt;
    opt.conversations = 16;
    opt.turns = 4;
    opt.concurrency = 16;
    opt.seed = 3;
    const auto report = orchestrator::simulate(*engine, articles, opt);
    v.note("simulated_turns", report.turns);
    v.note("max_latency_ms", report.max_latency.count());
    v.expect(report.logs.size() == 16, "16 conversations completed");
    v.expect(report.contaminated.empty(), "no conversation sees another's messages");
    v.expect(report.max_latency <= 200ms, "concurrent turns within 200 ms");
  }
  return v.outcome();
}

ConversationState user_says(const std::string& text, const Article& article = Article::from_text("a", "Text.")) {
  ConversationState s;
  s.conversation_id = "c1";
  s.article = article;
  s.append(Speaker::kHuman, text);
  return s;
}

Outcome responder_exemplars() {
  using namespace responders;
  const auto pack = testing::shipped_pack();
  Verdict v;

  v.expect(render_topic(pack->topic_templates[1], "Sports") == "This article is about Sports", "topic sentence");
  v.expect(render_topic(pack->topic_templates[0], "Sports") == "Sports", "bare topic");
  auto no_model = std::make_shared<ResponderPack>(*pack);
  no_model->topic_model = nullptr;
  TopicResponder untopical(no_model, 1);
  untopical.wake_up(Article::from_text("a", "Text about sports."));
  v.expect(!untopical.respond(user_says("what is it about?")).has_value(), "no topic gives no candidate");

  FactResponder facts(pack, 2);
  facts.wake_up(Article::from_text("a", "Text."));
  ConversationState empty;
  empty.article = Article::from_text("a", "Text.");
  v.expect(facts.peek(empty) == 0u, "empty history takes the first fact");
  const auto brain = user_says("I read that the human brain is mostly water");
  const auto first = facts.peek(brain);
  v.expect(first && pack->facts->facts[*first] == "The human brain is about 75% water.", "brain fact retrieved");
  facts.respond(brain);
  const auto second = facts.peek(brain);
  v.expect(second.has_value() && second != first, "second-best fact once the first is used");

  auto entities = [&](const std::string& text) {
    EntityResponder r(pack, 5);
    r.wake_up(Article::from_text("a", text));
    std::set<std::string> out;
    while (auto reply = r.respond(user_says("hi"))) out.insert(*reply);
    return out;
  };
  v.expect(entities("Many Tibetan herders raise yaks.").contains("I met a Tibetan once, she was nice."), "nationality");
  v.expect(entities("The city was founded in 1906.").contains("What happened in 1906 ?"), "date");
  v.expect(entities("it rained all day.").empty(), "entity-free article gives nothing");

  SimpleAnswersResponder simple(pack);
  v.expect(simple.respond(user_says("What's your name ?")) == "My name is RLLChatbot.", "name");
  v.expect(simple.respond(user_says("Who made you ?")) ==
               "I am a chatbot developed by students at McGill University.",
           "maker");
  v.expect(!simple.respond(user_says("Tell me about dogs")).has_value(), "no simple answer");

  PatternResponder pattern(pack);
  v.expect(pattern.respond(user_says("We don't follow prodigies anymore")) == "By \"we\" do you mean you and me?",
           "pattern we");
  v.expect(pattern.respond(user_says("I have no idea")) == "\"?\" No idea about that?", "pattern no idea");
  v.expect(!pattern.respond(user_says("blorp zint quux")).has_value(), "gibberish gives nothing");

  EchoStub echo(K::kHredReddit);
  v.expect(echo.respond(user_says("repeat after me")) == "repeat after me", "echo stub");

  const auto greece = Article::from_text(
      "greece",
      "In addition to the above, Greece is also to start oil and gas exploration in other locations in the Ionian "
      "Sea, as well as the Libyan Sea, within the Greek exclusive economic zone, south of Crete. The Ministry of the "
      "Environment, Energy and Climate Change announced that there was interest from various countries (including "
      "Norway and the United States) in exploration, and the first results regarding the amount of oil and gas in "
      "these locations were expected in the summer of 2012. In November 2012, a report published by Deutsche Bank "
      "estimated the value of natural gas reserves south of Crete at 427 billion euros.");
  ExtractiveQaStub qa(pack->text);
  qa.wake_up(greece);
  const auto answer = qa.respond(user_says("Where is Greece starting oil and gas explorations?", greece));
  v.expect(answer && answer->starts_with("In addition to the above, Greece is also to start oil and gas exploration"),
           "extractive answer");
  return v.outcome();
}

}  // namespace

std::vector<Criterion> system_criteria() {
  return {{"selection_rules", 30s, selection_rules},
          {"orchestrator_budget", 60s, orchestrator_budget},
          {"responder_exemplars", 30s, responder_exemplars}};
}

}  // namespace chorus::acceptance
