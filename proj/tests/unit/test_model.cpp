#include <doctest.h>

#include "chorus/model/types.hpp"

using namespace chorus;

TEST_SUITE("model") {
  TEST_CASE("shape_reward follows the vote and rating bands") {
    CHECK(shape_reward(1, 5) == 1.0);
    CHECK(shape_reward(0, 5) == 0.0);
    CHECK(shape_reward(1, 4) == 0.8);
    CHECK(shape_reward(1, 3) == 0.8);
    CHECK(shape_reward(1, 2) == 0.2);
    CHECK(shape_reward(1, 1) == 0.2);
    CHECK_THROWS_AS(shape_reward(1, 0), ValidationError);
    CHECK_THROWS_AS(shape_reward(0, 6), ValidationError);
  }

  TEST_CASE("shape_reward is monotone in the rating and bounded to four values") {
    double prev = -1.0;
    for (int r = 1; r <= 5; ++r) {
      const double v = shape_reward(1, r);
      CHECK(v >= prev);
      CHECK((v == 0.2 || v == 0.8 || v == 1.0));
      CHECK(shape_reward(0, r) == 0.0);
      prev = v;
    }
  }

  TEST_CASE("is_terminal depends only on next candidates") {
    TransitionTuple t;
    CHECK(is_terminal(t));
    for (int i = 0; i < 8; ++i) t.next_candidates.push_back(Candidate{ResponderKind::kFact, "x", 0.0});
    CHECK_FALSE(is_terminal(t));
  }

  TEST_CASE("responder names round-trip") {
    for (auto k : kAllResponders) CHECK(responder_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(responder_from_string("alice"), ValidationError);
  }

  TEST_CASE("article sentences cover the text") {
    const auto a = Article::from_text("a1", "Dogs live long. Do cats? Yes! J. Smith agrees.");
    REQUIRE(a.sentences.size() == 4);
    CHECK(a.sentences[3] == "J. Smith agrees.");
    std::string joined;
    for (const auto& s : a.sentences) joined += s + " ";
    CHECK(std::string(trim(joined)) == a.text);
    CHECK_THROWS_AS(Article::from_text("a2", "   "), ValidationError);
  }

  TEST_CASE("conversation state keeps increasing turn indices") {
    ConversationState s;
    s.article = Article::from_text("a", "Text.");
    s.append(Speaker::kBot, "hello");
    s.append(Speaker::kHuman, "hi");
    CHECK(s.history[1].turn_index == 1);
    CHECK(s.last_human()->text == "hi");
    CHECK_NOTHROW(s.validate());
    CHECK_THROWS_AS(s.append(Speaker::kHuman, " "), ValidationError);
    s.history[1].turn_index = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
  }
}
