#include <doctest.h>

#include <numeric>

#include "chorus/responders/builtin.hpp"
#include "chorus/responders/pattern_engine.hpp"
#include "chorus/responders/topic_model.hpp"
#include "chorus/text/tokenize.hpp"
#include "support.hpp"

using namespace chorus;
using namespace chorus::responders;

namespace {

ConversationState state_with(const Article& article, std::initializer_list<std::pair<Speaker, std::string>> msgs) {
  ConversationState s;
  s.conversation_id = "c1";
  s.article = article;
  for (const auto& [sp, text] : msgs) s.append(sp, text);
  return s;
}

ConversationState user_says(const std::string& text) {
  return state_with(Article::from_text("a", "An article."), {{Speaker::kHuman, text}});
}

// Brute-force argmin of cosine distance with exclusions, lowest index on ties.
std::optional<std::size_t> fact_oracle(const FactBase& base, const Eigen::VectorXd& c, const std::set<std::size_t>& used) {
  std::optional<std::size_t> best;
  double best_d = 1e300;
  for (std::size_t i = 0; i < base.facts.size(); ++i) {
    if (used.contains(i)) continue;
    const Eigen::VectorXd f = base.matrix.row(static_cast<Eigen::Index>(i)).transpose();
    const double nf = f.norm();
    const double nc = c.norm();
    const double cos = (nf == 0 || nc == 0) ? 0.0 : f.dot(c) / (nf * nc);
    if (1.0 - cos < best_d) {
      best_d = 1.0 - cos;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("responders") {
  TEST_CASE("derive_seed separates conversations and responders") {
    const auto a = derive_seed(1, "c1", ResponderKind::kFact);
    CHECK(a == derive_seed(1, "c1", ResponderKind::kFact));
    CHECK(a != derive_seed(1, "c2", ResponderKind::kFact));
    CHECK(a != derive_seed(1, "c1", ResponderKind::kTopic));
    CHECK(a != derive_seed(2, "c1", ResponderKind::kFact));
  }

  TEST_CASE("topic model learns a separable toy corpus") {
    std::vector<TopicExample> data = {{5, "football match goal team"}, {6, "stock market bank profit"}};
    TopicModel m(10, 8);
    m.train(data, TopicTrainConfig{200, 0.5, 1});
    CHECK(m.classify("football match goal team").label == 5);
    CHECK(m.classify("stock market bank profit").label == 6);
    const auto p = m.classify("football bank");
    CHECK(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("untrained topic model is uniform") {
    TopicModel m(8, 4);
    CHECK(m.classify("anything at all").confidence == doctest::Approx(0.1));
    CHECK_THROWS_AS(m.classify("   "), ValidationError);
  }

  TEST_CASE("topic model save and load round-trip") {
    std::vector<TopicExample> data = {{2, "doctor hospital patient"}, {9, "election vote senate"}};
    TopicModel m(10, 8);
    m.train(data, TopicTrainConfig{50, 0.5, 3});
    const auto path = testing::scratch_dir("topic") / "m.bin";
    m.save(path);
    const auto back = TopicModel::load(path);
    CHECK(back.classify("doctor vote").probabilities == m.classify("doctor vote").probabilities);
  }

  TEST_CASE("shipped topic model covers the sports vocabulary") {
    CHECK(testing::shipped_pack()->topic_model->classify("the team won the football match and the cup").label_name() == "Sports");
  }

  TEST_CASE("topic sentences") {
    const auto& tmpl = testing::shipped_pack()->topic_templates;
    CHECK(render_topic(tmpl[1], "Sports") == "This article is about Sports");
    CHECK(render_topic(tmpl[0], "Sports") == "Sports");
    auto no_model = std::make_shared<ResponderPack>(*testing::shipped_pack());
    no_model->topic_model = nullptr;
    TopicResponder r(no_model, 1);
    r.wake_up(Article::from_text("a", "Text about sports."));
    CHECK_FALSE(r.respond(user_says("what is it about?")).has_value());
  }

  TEST_CASE("topic responder picks one of the sentences") {
    TopicResponder r(testing::shipped_pack(), 4);
    r.wake_up(Article::from_text("a", "The team won the football match and the cup."));
    const auto reply = r.respond(user_says("What is the article about?"));
    REQUIRE(reply.has_value());
    CHECK(reply->find("Sports") != std::string::npos);
  }

  TEST_CASE("fact retrieval with empty history takes the first fact") {
    const auto pack = testing::shipped_pack();
    FactResponder r(pack, 1);
    r.wake_up(Article::from_text("a", "Text."));
    ConversationState empty;
    empty.article = Article::from_text("a", "Text.");
    CHECK(r.peek(empty) == 0u);
  }

  TEST_CASE("fact retrieval finds the brain fact and never repeats") {
    const auto pack = testing::shipped_pack();
    const auto& base = *pack->facts;
    FactResponder r(pack, 2);
    r.wake_up(Article::from_text("a", "Text."));
    auto s = state_with(Article::from_text("a", "Text."), {{Speaker::kHuman, "I read that the human brain is mostly water"}});
    const auto idx = r.peek(s);
    REQUIRE(idx.has_value());
    CHECK(base.facts[*idx] == "The human brain is about 75% water.");
    std::vector<std::string> words;
    for (auto& w : text::words_only(text::tokenize(s.history[0].text))) words.push_back(w);
    const auto c = text::avg_embedding(words, pack->text->embeddings);
    CHECK(fact_oracle(base, c, {}) == idx);
    const auto reply = r.respond(s);
    REQUIRE(reply.has_value());
    CHECK(reply->find("brain is about 75% water.") != std::string::npos);
    const auto second = r.peek(s);
    CHECK(second == fact_oracle(base, c, {*idx}));
    CHECK(second != idx);
    std::set<std::string> seen{*reply};
    while (auto next = r.respond(s)) CHECK(seen.insert(*next).second);
    CHECK(r.used().size() == base.facts.size());
  }

  TEST_CASE("fact replies get a prefix when the user asks a question") {
    const auto pack = testing::shipped_pack();
    FactResponder r(pack, 3);
    r.wake_up(Article::from_text("a", "Text."));
    const auto reply = r.respond(user_says("Do you know anything about the brain?"));
    REQUIRE(reply.has_value());
    bool prefixed = false;
    for (const auto& p : pack->facts->question_prefixes) {
      prefixed |= reply->starts_with(p.substr(0, p.find("<fact sentence>")));
    }
    CHECK(prefixed);
  }

  TEST_CASE("entity sentences use article entities") {
    const auto pack = testing::shipped_pack();
    auto collect = [&](const std::string& article) {
      EntityResponder r(pack, 5);
      r.wake_up(Article::from_text("a", article));
      std::set<std::string> out;
      while (auto reply = r.respond(user_says("hi"))) CHECK(out.insert(*reply).second);
      return out;
    };
    CHECK(collect("Many Tibetan herders raise yaks.").contains("I met a Tibetan once, she was nice."));
    CHECK(collect("The city was founded in 1906.").contains("What happened in 1906 ?"));
    CHECK(collect("it rained all day.").empty());
  }

  TEST_CASE("simple answers") {
    SimpleAnswersResponder r(testing::shipped_pack());
    CHECK(r.respond(user_says("What's your name ?")) == "My name is RLLChatbot.");
    CHECK(r.respond(user_says("WHAT'S YOUR NAME?")) == "My name is RLLChatbot.");
    CHECK(r.respond(user_says("Who made you ?")) == "I am a chatbot developed by students at McGill University.");
    CHECK(r.respond(user_says("How are you ?")) == "I am great! What about you?");
    CHECK(r.respond(user_says("What are you ?")) == "I am a chatbot.");
    CHECK(r.respond(user_says("Where do you live ?")) == "I can live everywhere at anytime.");
    CHECK_FALSE(r.respond(user_says("Tell me about dogs")).has_value());
  }

  TEST_CASE("pattern engine matching") {
    CHECK(match_pattern({"we", "*"}, {"we", "do", "n't"}) == std::vector<std::string>{"do n't"});
    CHECK_FALSE(match_pattern({"we", "*"}, {"we"}).has_value());
    CHECK(match_pattern({"*", "and", "*"}, {"a", "and", "b", "and", "c"}) == std::vector<std::string>{"a", "b and c"});
    const auto rules = parse_rules(
        "1 | HELLO * | star $1\n1 | HELLO THERE | exact\n1 | _ THERE | underscore\n2 | * THERE | high\n"
        "0 | GREET | @srai HELLO THERE\n0 | LOOP | @srai LOOP\n");
    PatternEngine e(rules);
    CHECK(e.respond("hello there") == "high");
    PatternEngine low(parse_rules("1 | HELLO * | star $1\n1 | HELLO THERE | exact\n1 | _ THERE | underscore\n"));
    CHECK(low.respond("hello there") == "underscore");
    PatternEngine no_us(parse_rules("1 | HELLO * | star $1\n1 | HELLO THERE | exact\n"));
    CHECK(no_us.respond("Hello there!") == "exact");
    CHECK(no_us.respond("hello big world") == "star big world");
    CHECK(e.respond("greet") == "high");
    CHECK_FALSE(e.respond("loop").has_value());
    CHECK_THROWS_AS(parse_rules("x | A | b"), ValidationError);
  }

  TEST_CASE("pattern responder keeps quoted replies unless the legacy flag is on") {
    PatternResponder r(testing::shipped_pack());
    CHECK(r.respond(user_says("We don't follow prodigies anymore")) == "By \"we\" do you mean you and me?");
    CHECK(r.respond(user_says("I have no idea")) == "\"?\" No idea about that?");
    CHECK_FALSE(r.respond(user_says("blorp zint quux")).has_value());
    auto legacy = std::make_shared<ResponderPack>(*testing::shipped_pack());
    legacy->legacy_quote_suppression = true;
    PatternResponder old(legacy);
    CHECK_FALSE(old.respond(user_says("I have no idea")).has_value());
    CHECK(old.respond(user_says("hello")).has_value());
  }

  TEST_CASE("stubs") {
    const auto pack = testing::shipped_pack();
    EchoStub echo(ResponderKind::kHredReddit);
    CHECK(echo.respond(user_says("repeat after me")) == "repeat after me");

    SocialStub social(pack, ResponderKind::kHredTwitter, 1);
    std::set<std::string> lines;
    while (auto l = social.respond(user_says("hi"))) CHECK(lines.insert(*l).second);
    CHECK(lines.size() == pack->social_lines.size());

    QuestionGenStub qg(3);
    qg.wake_up(Article::from_text("a", "The human brain is about 75% water. Dogs bark."));
    REQUIRE(qg.questions().size() == 2);
    CHECK(qg.questions()[0] == "Is the human brain about 75% water?");
    CHECK(qg.questions()[1] == "Did you know that Dogs bark?");
  }

  TEST_CASE("extractive QA stub answers with the best overlapping sentence") {
    const std::string greece =
        "In addition to the above, Greece is also to start oil and gas exploration in other locations in the Ionian "
        "Sea, as well as the Libyan Sea, within the Greek exclusive economic zone, south of Crete. The Ministry of the "
        "Environment, Energy and Climate Change announced that there was interest from various countries (including "
        "Norway and the United States) in exploration, and the first results regarding the amount of oil and gas in "
        "these locations were expected in the summer of 2012. In November 2012, a report published by Deutsche Bank "
        "estimated the value of natural gas reserves south of Crete at 427 billion euros.";
    const auto article = Article::from_text("greece", greece);
    ExtractiveQaStub qa(testing::shipped_text());
    qa.wake_up(article);
    const auto reply = qa.respond(state_with(article, {{Speaker::kHuman, "Where is Greece starting oil and gas explorations?"}}));
    REQUIRE(reply.has_value());
    CHECK(reply->starts_with("In addition to the above, Greece is also to start oil and gas exploration"));
    CHECK_FALSE(qa.respond(state_with(article, {{Speaker::kHuman, "hmm"}})).has_value());
  }

  TEST_CASE("builtin factory covers every responder kind") {
    for (auto kind : kAllResponders) {
      auto r = make_builtin_factory(kind, testing::shipped_pack())("c", 1);
      CHECK(r->kind() == kind);
    }
  }
}
