#include <doctest.h>

#include <random>

#include "chorus/text/embeddings.hpp"
#include "chorus/text/entities.hpp"
#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"
#include "support.hpp"

using namespace chorus;
using namespace chorus::text;

namespace {

using Strings = std::vector<std::string>;

EmbeddingStore toy_store() {
  EmbeddingStore s(3);
  s.insert("a", Eigen::Vector3d(1, 0, 0));
  s.insert("b", Eigen::Vector3d(0, 1, 0));
  s.insert("c", Eigen::Vector3d(0, 0, 1));
  s.insert("d", Eigen::Vector3d(1, -2, 0.5));
  s.insert("e", Eigen::Vector3d(-3, 1, 1));
  return s;
}

Eigen::VectorXd random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace

TEST_SUITE("text") {
  TEST_CASE("tokenize splits punctuation and contractions") {
    CHECK(tokenize("Hello, world!") == Strings{"hello", ",", "world", "!"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Don't stop") == Strings{"do", "n't", "stop"});
    CHECK(tokenize("It's 1,000.5 well-known") == Strings{"it", "'s", "1,000.5", "well-known"});
    CHECK(tokenize("I'm") == Strings{"i", "'m"});
  }

  TEST_CASE("tokenize is idempotent on its own joined output") {
    for (const char* s : {"Don't stop, believing!", "What's 2,500 + 3?", "e-mail me at 5 p.m.", "we'll see..."}) {
      const auto once = tokenize(s);
      CHECK(tokenize(join_tokens(once)) == once);
    }
  }

  TEST_CASE("embedding parser skips a count header only") {
    std::istringstream with_header("2 3\nfoo 1 2 3\nFoo 9 9 9\nbar 0 0 1\n");
    const auto s = EmbeddingStore::parse(with_header);
    CHECK(s.dimension() == 3);
    CHECK(s.size() == 2);
    CHECK((*s.find("foo"))[0] == 1.0);  // first occurrence wins
    CHECK(s.lookup("missing").isZero());
    CHECK(s.find("missing") == nullptr);
  }

  TEST_CASE("avg_embedding averages known tokens") {
    const auto s = toy_store();
    CHECK(avg_embedding(Strings{"a", "a"}, s).isApprox(Eigen::Vector3d(1, 0, 0)));
    CHECK(avg_embedding(Strings{"zz", "yy"}, s).isZero());
    const auto mixed = avg_embedding(Strings{"a", "zz", "d"}, s);
    Eigen::Vector3d oracle(0, 0, 0);
    oracle += *s.find("a");
    oracle += *s.find("d");
    CHECK(mixed.isApprox(oracle / 2.0));
  }

  TEST_CASE("cosine_sim edge cases and symmetry") {
    Eigen::Vector3d v(1, 2, 3);
    CHECK(cosine_sim(v, v) == doctest::Approx(1.0));
    CHECK(cosine_sim(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)) == 0.0);
    CHECK(cosine_sim(v, Eigen::Vector3d::Zero()) == 0.0);
    CHECK_THROWS_AS(cosine_sim(v, Eigen::Vector2d(1, 1)), std::invalid_argument);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      const auto a = random_vec(rng, 7);
      const auto b = random_vec(rng, 7);
      CHECK(cosine_sim(a, b) == doctest::Approx(cosine_sim(b, a)).epsilon(1e-12));
      CHECK(std::abs(cosine_sim(a, b)) <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("extrema_sim matches a brute-force pooling oracle") {
    const auto s = toy_store();
    CHECK(extrema_sim(Strings{"d"}, Strings{"d"}, s) == doctest::Approx(1.0));
    CHECK(extrema_sim(Strings{}, Strings{"d"}, s) == 0.0);
    const Strings lhs{"a", "d", "e"};
    const Strings rhs{"b", "c"};
    auto pool = [&](const Strings& toks) {
      Eigen::Vector3d p(0, 0, 0);
      for (int d = 0; d < 3; ++d) {
        for (const auto& t : toks) {
          const double x = (*s.find(t))[d];
          if (std::abs(x) > std::abs(p[d])) p[d] = x;
        }
      }
      return p;
    };
    const auto pa = pool(lhs);
    const auto pb = pool(rhs);
    CHECK(extrema_sim(lhs, rhs, s) == doctest::Approx(pa.dot(pb) / (pa.norm() * pb.norm())));
    CHECK(extrema_sim(Strings{"e", "a", "d"}, rhs, s) == doctest::Approx(extrema_sim(lhs, rhs, s)));
  }

  TEST_CASE("greedy_match_sim matches a double-loop oracle") {
    const auto s = toy_store();
    CHECK(greedy_match_sim(Strings{"a", "d"}, Strings{"a", "d"}, s) == doctest::Approx(1.0));
    CHECK(greedy_match_sim(Strings{"a"}, Strings{"b", "c"}, s) == doctest::Approx(0.0));
    CHECK(greedy_match_sim(Strings{"a"}, Strings{}, s) == 0.0);
    const Strings lhs{"a", "d", "e"};
    const Strings rhs{"b", "e"};
    auto directed = [&](const Strings& x, const Strings& y) {
      double total = 0.0;
      for (const auto& u : x) {
        double best = -1.0;
        for (const auto& v : y) best = std::max(best, cosine_sim(*s.find(u), *s.find(v)));
        total += best;
      }
      return total / static_cast<double>(x.size());
    };
    CHECK(greedy_match_sim(lhs, rhs, s) == doctest::Approx(0.5 * (directed(lhs, rhs) + directed(rhs, lhs))));
  }

  TEST_CASE("synthetic embeddings are deterministic unit vectors") {
    const Strings vocab{"dog", "dogs", "brain", "water"};
    const auto a = EmbeddingStore::synthetic(vocab, 16, 5);
    const auto b = EmbeddingStore::synthetic(vocab, 16, 5);
    CHECK(a.find("dog")->isApprox(*b.find("dog")));
    CHECK(a.find("brain")->norm() == doctest::Approx(1.0));
    const auto dir = testing::scratch_dir("emb");
    a.save(dir / "e.txt");
    const auto back = EmbeddingStore::load(dir / "e.txt");
    CHECK(back.size() == 4);
    CHECK(back.find("water")->isApprox(*a.find("water"), 1e-7));
  }

  TEST_CASE("message types") {
    const auto& lex = testing::shipped_text()->lexicons;
    using MT = MessageType;
    CHECK(classify_message_types("Hello there", lex) == std::set<MT>{MT::kGreeting});
    CHECK(classify_message_types("What happened in 1906?", lex) == std::set<MT>{MT::kQuestion});
    CHECK(classify_message_types("no thanks", lex) == std::set<MT>{MT::kNegative});
    CHECK(classify_message_types("yes please, tell me", lex).contains(MT::kAffirmative));
  }

  TEST_CASE("sentiment") {
    const auto& lex = testing::shipped_text()->lexicons;
    CHECK(sentiment("great wonderful amazing", lex) == Sentiment::kPositive);
    CHECK(sentiment("", lex) == Sentiment::kNeutral);
    CHECK(sentiment("not good", lex) == Sentiment::kNegative);
  }

  TEST_CASE("generic messages ignore punctuation") {
    const auto& lex = testing::shipped_text()->lexicons;
    CHECK(is_generic(tokenize("ok!"), lex));
    CHECK(is_generic(tokenize("is it so?"), lex));
    CHECK_FALSE(is_generic(tokenize("dogs live long"), lex));
  }

  TEST_CASE("entity tagging") {
    const auto& tagger = testing::shipped_text()->tagger;
    const auto tags = tagger.tag("Margaret Thatcher travelled to Beijing");
    REQUIRE(tags.size() == 2);
    CHECK(tags[0].kind == EntityKind::kPerson);
    CHECK(tags[0].surface == "Margaret Thatcher");
    CHECK(tags[1].kind == EntityKind::kGpe);
    CHECK(tags[1].surface == "Beijing");
    const auto date = tagger.tag("It happened in 1906");
    REQUIRE(date.size() == 1);
    CHECK(date[0].kind == EntityKind::kDate);
    CHECK(date[0].surface == "1906");
    CHECK(tagger.tag("").empty());
  }

  TEST_CASE("entity spans never overlap and are stable") {
    const auto& tagger = testing::shipped_text()->tagger;
    const std::string text =
        "In September 1982, Margaret Thatcher travelled to Beijing to meet the Chinese government "
        "and Deutsche Bank officials near the Ionian Sea.";
    const auto tags = tagger.tag(text);
    CHECK(tags == tagger.tag(text));
    for (std::size_t i = 1; i < tags.size(); ++i) CHECK(tags[i - 1].end <= tags[i].start);
  }
}
