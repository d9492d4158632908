#include <doctest.h>

#include <algorithm>
#include <random>

#include "chorus/features/extractor.hpp"
#include "chorus/text/tokenize.hpp"
#include "support.hpp"

using namespace chorus;
using namespace chorus::features;

namespace {

const FeatureExtractor& extractor() {
  static const FeatureExtractor fx(testing::shipped_text());
  return fx;
}

Article dog_article() {
  return Article::from_text("dogs",
                            "The median longevity of mixed-breed dogs is longer than that of purebred dogs. "
                            "Pusuke, the oldest dog recognized by Guinness Book of World Records, died in 2011.");
}

std::vector<Message> dog_context() {
  return {Message{Speaker::kBot, "Hello! Let's talk about dogs.", 0},
          Message{Speaker::kHuman, "Why do mixed-breed dogs live so long?", 1}};
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("manifest total is 3d + 48 and contiguous") {
    const auto m = feature_manifest(300);
    CHECK(m.total() == 948);
    std::size_t offset = 0;
    for (const auto& e : m.layout) {
      CHECK(e.offset == offset);
      offset += e.length;
    }
    CHECK(feature_manifest(7).total() == 69);
  }

  TEST_CASE("manifest serializes identically and round-trips") {
    const auto a = feature_manifest(300).to_json().dump();
    const auto b = feature_manifest(300).to_json().dump();
    CHECK(a == b);
    CHECK(FeatureManifest::from_json(nlohmann::json::parse(a)) == feature_manifest(300));
  }

  TEST_CASE("candidate equal to full context has cosine 1") {
    const auto ctx = dog_context();
    const auto fv = extractor().extract(dog_article(), ctx, ctx[0].text + " " + ctx[1].text);
    CHECK(fv.at("sim_cosine_cand_ctx") == doctest::Approx(1.0));
    CHECK(fv.values.size() == static_cast<Eigen::Index>(extractor().dimension()));
  }

  TEST_CASE("empty context leaves the context block at zero") {
    const auto fv = extractor().extract(dog_article(), std::vector<Message>{}, "Dogs are great.");
    const auto& e = extractor().manifest().entry("emb_context");
    CHECK(fv.values.segment(static_cast<Eigen::Index>(e.offset), static_cast<Eigen::Index>(e.length)).isZero());
    CHECK(fv.at("context_messages") == 0.0);
    CHECK(fv.at("word_count_user") == 0.0);
  }

  TEST_CASE("blank candidate is rejected") {
    CHECK_THROWS_AS(extractor().extract(dog_article(), dog_context(), "  "), ValidationError);
  }

  TEST_CASE("fixture triple matches a feature-by-feature reference") {
    const auto& res = *testing::shipped_text();
    const auto article = dog_article();
    const auto ctx = dog_context();
    const std::string cand = "Mixed-breed dogs really live longer than purebred dogs, not so?";
    const auto fv = extractor().extract(article, ctx, cand);

    const auto cand_words = text::words_only(text::tokenize(cand));
    std::vector<std::string> ctx_words;
    for (const auto& m : ctx) {
      for (auto& w : text::words_only(text::tokenize(m.text))) ctx_words.push_back(w);
    }
    const auto art_words = text::words_only(text::tokenize(article.text));
    const auto ce = text::avg_embedding(cand_words, res.embeddings);
    const auto xe = text::avg_embedding(ctx_words, res.embeddings);
    const auto ae = text::avg_embedding(art_words, res.embeddings);
    CHECK(fv.at("sim_cosine_cand_ctx") == doctest::Approx(text::cosine_sim(ce, xe)));
    CHECK(fv.at("sim_cosine_cand_art") == doctest::Approx(text::cosine_sim(ce, ae)));
    CHECK(fv.at("sim_extrema_cand_art") == doctest::Approx(text::extrema_sim(cand_words, art_words, res.embeddings)));
    CHECK(fv.at("sim_greedy_cand_ctx") == doctest::Approx(text::greedy_match_sim(cand_words, ctx_words, res.embeddings)));

    auto content = [&](const std::vector<std::string>& ws) {
      std::vector<std::string> out;
      for (const auto& w : ws) {
        if (!res.lexicons.stop_words.contains(w)) out.push_back(w);
      }
      return out;
    };
    auto shared_ngrams = [](const std::vector<std::string>& a, const std::vector<std::string>& b, std::size_t n) {
      std::set<std::vector<std::string>> sa, sb;
      for (std::size_t i = 0; i + n <= a.size(); ++i) sa.insert({a.begin() + i, a.begin() + i + n});
      for (std::size_t i = 0; i + n <= b.size(); ++i) sb.insert({b.begin() + i, b.begin() + i + n});
      double c = 0;
      for (const auto& g : sa) c += sb.contains(g) ? 1 : 0;
      return c;
    };
    const auto cc = content(cand_words);
    const auto ac = content(art_words);
    const auto xc = content(ctx_words);
    CHECK(fv.at("overlap_words_cand_art") == shared_ngrams(cc, ac, 1));
    CHECK(fv.at("overlap_bigrams_cand_art") == shared_ngrams(cc, ac, 2));
    CHECK(fv.at("overlap_trigrams_cand_ctx") == shared_ngrams(cc, xc, 3));
    CHECK(fv.at("overlap_words_cand_art") >= 3.0);

    CHECK(fv.at("has_intensifier_cand") == 1.0);
    CHECK(fv.at("has_negation_cand") == 1.0);
    CHECK(fv.at("has_wh_user") == 1.0);
    CHECK(fv.at("type_question_user") == 1.0);
    CHECK(fv.at("type_question_cand") == 1.0);
    CHECK(fv.at("word_count_cand") == static_cast<double>(cand_words.size()));
    CHECK(fv.at("word_count_user") == 7.0);
    CHECK(fv.at("context_messages") == 2.0);
    CHECK(fv.at("article_sentences") == 2.0);
    CHECK(fv.at("generic_cand") == 0.0);
    CHECK(fv.at("sentiment_negative_cand") + fv.at("sentiment_neutral_cand") + fv.at("sentiment_positive_cand") == 1.0);
  }

  TEST_CASE("flags are binary, counts non-negative, similarities bounded") {
    const std::vector<std::string> cands = {"ok", "What do you think about dogs?", "I hate this damn article!",
                                            "Pusuke was recognized by Guinness Book of World Records."};
    for (const auto& c : cands) {
      const auto fv = extractor().extract(dog_article(), dog_context(), c);
      for (const auto& e : extractor().manifest().layout) {
        const double v = fv.values[static_cast<Eigen::Index>(e.offset)];
        if (e.name.starts_with("has_") || e.name.starts_with("type_") || e.name.starts_with("generic_") ||
            e.name.starts_with("sentiment_")) {
          CHECK((v == 0.0 || v == 1.0));
        } else if (e.name.starts_with("overlap_") || e.name.starts_with("word_count") || e.name == "context_messages") {
          CHECK(v >= 0.0);
        } else if (e.name.starts_with("sim_")) {
          CHECK(std::abs(v) <= 1.0 + 1e-9);
        }
      }
    }
  }

  TEST_CASE("order-insensitive features survive token permutation") {
    const std::vector<std::string> toks = {"purebred", "dogs", "longevity", "Guinness", "records", "really"};
    std::mt19937_64 rng(9);
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += (s.empty() ? "" : " ") + t;
      return s;
    };
    const auto base = extractor().extract(dog_article(), dog_context(), join(toks));
    for (int i = 0; i < 5; ++i) {
      auto p = toks;
      std::shuffle(p.begin(), p.end(), rng);
      const auto fv = extractor().extract(dog_article(), dog_context(), join(p));
      CHECK(fv.at("overlap_words_cand_art") == base.at("overlap_words_cand_art"));
      CHECK(fv.at("overlap_words_cand_ctx") == base.at("overlap_words_cand_ctx"));
      CHECK(fv.at("has_intensifier_cand") == base.at("has_intensifier_cand"));
      CHECK(fv.at("word_count_cand") == base.at("word_count_cand"));
      CHECK(fv.at("sim_cosine_cand_art") == doctest::Approx(base.at("sim_cosine_cand_art")));
    }
  }
}
