#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "chorus/data/dataset.hpp"
#include "chorus/data/evaluation.hpp"
#include "doubles.hpp"
#include "support.hpp"

using namespace chorus;
using namespace chorus::data;

namespace {

using K = ResponderKind;

/// Builds a log with `turns` committed user turns of `per_turn` candidates after
/// an opener of two, plus one trailing uncommitted turn.
orchestrator::ConversationLog make_log(const std::string& id, const std::string& article_id, int turns,
                                       std::size_t per_turn, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  orchestrator::ConversationLog log;
  log.conversation_id = id;
  log.article = Article::from_text(article_id, "Article " + article_id + " talks about yaks. It is short.");
  ConversationState s;
  s.conversation_id = id;
  s.article = log.article;
  s.append(Speaker::kBot, "Hello!");
  auto turn = [&](std::size_t n, const std::string& user) {
    orchestrator::TurnRecord r;
    r.conversation_id = id;
    r.user_message = user;
    if (!user.empty()) s.append(Speaker::kHuman, user);
    r.turn_index = s.next_turn_index();
    for (std::size_t i = 0; i < n; ++i) {
      r.candidates.push_back({kAllResponders[i % 9], "reply " + std::to_string(r.turn_index) + "." + std::to_string(i),
                              std::uniform_real_distribution<double>(0, 1)(rng)});
    }
    return r;
  };
  auto opener = turn(2, "");
  opener.chosen = 1;
  s.append(Speaker::kBot, opener.candidates[1].text);
  log.turns.push_back(opener);
  for (int t = 0; t < turns - 1; ++t) {
    auto r = turn(per_turn, "user says " + std::to_string(t));
    r.chosen = static_cast<std::size_t>(t) % per_turn;
    s.append(Speaker::kBot, r.candidates[*r.chosen].text);
    log.turns.push_back(r);
  }
  log.turns.push_back(turn(per_turn, "last words"));  // never committed
  log.history = s.history;
  return log;
}

std::vector<TransitionTuple> corpus(int conversations, int articles, std::uint64_t seed) {
  std::vector<TransitionTuple> out;
  for (int c = 0; c < conversations; ++c) {
    const auto log = make_log("c" + std::to_string(c), "a" + std::to_string(c % articles), 3, 4, seed + c);
    auto recs = export_transitions(log, 1 + c % 5);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

/// Synthetic turn with `n` candidates, the voted one at `voted`.
TurnGroup synthetic_turn(std::size_t id, std::size_t n, std::size_t voted, std::size_t context = 3) {
  TurnGroup g;
  g.conversation_id = "t" + std::to_string(id);
  g.turn_index = static_cast<std::uint32_t>(context);
  g.state.conversation_id = g.conversation_id;
  g.state.article = Article::from_text("a", "Some article.");
  for (std::size_t i = 0; i < context; ++i) {
    g.state.append(i % 2 ? Speaker::kHuman : Speaker::kBot, "message number " + std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.candidates.push_back({K::kPattern, g.conversation_id + (i == voted ? " good " : " other ") + std::to_string(i), 0});
  }
  g.voted = voted;
  return g;
}

using testing::HashScorer;
using testing::OracleScorer;

std::shared_ptr<const selection::Selector> selector() {
  return selection::Selector::load(testing::data_dir(), testing::shipped_text());
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("export: one record per candidate, one vote per turn, one terminal turn") {
    // opener (2) + 4 user turns of 8 = 5 committed turns
    const auto log = make_log("c1", "a1", 5, 8);
    const auto recs = export_transitions(log, 5);
    CHECK(recs.size() == 2 + 4 * 8);
    int votes = 0;
    int terminal = 0;
    std::set<std::uint32_t> terminal_turns;
    for (const auto& r : recs) {
      votes += r.vote;
      CHECK(r.reward == (r.vote ? 1.0 : 0.0));
      CHECK(r.final_rating == 5);
      if (is_terminal(r)) {
        ++terminal;
        terminal_turns.insert(r.turn_index);
        CHECK_FALSE(r.next_state.has_value());
      } else {
        REQUIRE(r.next_state.has_value());
        CHECK(r.next_state->history.size() == r.state.history.size() + 2);
        CHECK(r.next_candidates.size() == 8);
      }
      for (const auto& m : r.state.history) CHECK(m.turn_index < r.turn_index);
    }
    CHECK(votes == 5);
    CHECK(terminal == 8);
    CHECK(terminal_turns.size() == 1);
    CHECK(recs.front().next_candidates.size() == 8);  // opener joins the first user turn

    for (int rating = 1; rating <= 5; ++rating) {
      for (const auto& r : export_transitions(log, rating)) {
        if (r.vote) CHECK(r.reward == shape_reward(1, rating));
      }
    }
    std::vector<std::string> warnings;
    CHECK(export_transitions(log, std::nullopt, &warnings).empty());
    CHECK(warnings.size() == 1);
    CHECK_THROWS_AS(export_transitions(log, 6), ValidationError);
  }

  TEST_CASE("dataset files round-trip losslessly") {
    const auto recs = corpus(6, 3, 9);
    std::stringstream buf;
    write_dataset(buf, recs);
    const auto back = read_dataset(buf);
    CHECK(back == recs);
    const auto path = testing::scratch_dir("dataset") / "d.ndjson";
    write_dataset(path, recs);
    CHECK(read_dataset(path) == recs);

    std::stringstream bad_header("{\"format\": \"other\", \"version\": 1}\n");
    CHECK_THROWS_AS(read_dataset(bad_header), ValidationError);
    std::stringstream bad_version("{\"format\": \"chorus-transitions\", \"version\": 9}\n");
    CHECK_THROWS_AS(read_dataset(bad_version), ValidationError);
    std::stringstream orphan(
        "{\"format\": \"chorus-transitions\", \"version\": 1}\n{\"kind\": \"transition\", \"conversation_id\": \"x\"}\n");
    CHECK_THROWS_AS(read_dataset(orphan), ValidationError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_dataset(empty), ValidationError);
  }

  TEST_CASE("split by article") {
    const auto recs = corpus(20, 10, 3);
    const auto split = split_by_article(recs, {}, 42);
    std::map<std::string, std::set<std::string>> articles;
    for (const auto& r : split.train) articles["train"].insert(r.state.article.id);
    for (const auto& r : split.valid) articles["valid"].insert(r.state.article.id);
    for (const auto& r : split.test) articles["test"].insert(r.state.article.id);
    CHECK(articles["train"].size() == 8);
    CHECK(articles["valid"].size() == 1);
    CHECK(articles["test"].size() == 1);
    for (const auto& a : articles["train"]) {
      CHECK_FALSE(articles["valid"].contains(a));
      CHECK_FALSE(articles["test"].contains(a));
    }
    CHECK_FALSE(articles["valid"] == articles["test"]);
    CHECK(split.train.size() + split.valid.size() + split.test.size() == recs.size());
    CHECK(split.manifest.size() == 10);
    CHECK(split_by_article(recs, {}, 42).manifest == split.manifest);
    CHECK(split.manifest_json().size() == 10);
    CHECK_THROWS_AS(split_by_article(corpus(4, 2, 1), {}, 1), ValidationError);
    CHECK_THROWS_AS(split_by_article(recs, {0.5, 0.1, 0.1}, 1), ValidationError);
    const auto three = split_by_article(corpus(3, 3, 1), {}, 5);
    CHECK(!three.train.empty());
    CHECK(!three.valid.empty());
    CHECK(!three.test.empty());
  }

  TEST_CASE("oversampling positives") {
    std::vector<TransitionTuple> recs;
    for (int i = 0; i < 8; ++i) {
      TransitionTuple t;
      t.conversation_id = "c";
      t.action = {K::kFact, "r" + std::to_string(i), 0};
      t.vote = i < 2 ? 1 : 0;
      recs.push_back(t);
    }
    const auto out = oversample_positives(recs, 3);
    std::map<std::string, int> count;
    int pos = 0;
    for (const auto& r : out) {
      count[r.action.text]++;
      pos += r.vote;
    }
    CHECK(pos == 6);
    CHECK(out.size() == 12);
    CHECK(count["r0"] == 3);
    CHECK(count["r1"] == 3);
    for (int i = 2; i < 8; ++i) CHECK(count["r" + std::to_string(i)] == 1);
    CHECK(oversample_positives(out, 9) == out);  // balanced input is left alone
    CHECK(oversample_positives(recs, 3) == out);

    recs[2].vote = 1;  // 3 positives, 5 negatives -> remainder of 2 sampled
    const auto uneven = oversample_positives(recs, 4);
    int p = 0;
    for (const auto& r : uneven) p += r.vote;
    CHECK(p == 5);
    std::vector<TransitionTuple> only_neg(recs.begin() + 3, recs.end());
    CHECK_THROWS_AS(oversample_positives(only_neg, 1), ValidationError);
  }

  TEST_CASE("grouping turns") {
    const auto recs = corpus(3, 3, 2);
    const auto groups = group_turns(recs);
    CHECK(groups.size() == 9);
    for (const auto& g : groups) REQUIRE(g.voted.has_value());
    auto unvoted = recs;
    for (auto& r : unvoted) {
      if (r.conversation_id == "c0") r.vote = 0;
    }
    std::vector<std::string> warnings;
    CHECK(group_turns(unvoted, &warnings).size() == 6);
    CHECK(warnings.size() == 3);
  }

  TEST_CASE("recall with an oracle scorer") {
    std::vector<TurnGroup> turns;
    for (std::size_t i = 0; i < 200; ++i) turns.push_back(synthetic_turn(i, 2 + i % 7, i % (2 + i % 7)));
    const auto sel = selector();
    const auto report = evaluate(turns, OracleScorer(), *sel, selection::PolicyKind::kArgmax);
    CHECK(report.at(1) == 1.0);
    CHECK(report.recall.size() == 8);
    CHECK(report.average_recall == 1.0);
    CHECK(recall_at_k(turns, OracleScorer(), *sel, selection::PolicyKind::kArgmax, 1) == 1.0);
  }

  TEST_CASE("recall with a random scorer matches chance") {
    std::vector<TurnGroup> turns;
    std::mt19937_64 rng(7);
    for (std::size_t i = 0; i < 10000; ++i) turns.push_back(synthetic_turn(i, 8, rng() % 8));
    const auto sel = selector();
    const auto report = evaluate(turns, HashScorer(), *sel, selection::PolicyKind::kArgmax);
    CHECK(report.at(1) == doctest::Approx(0.125).epsilon(0.08));
    CHECK(std::abs(report.at(1) - 0.125) < 0.01);
    for (std::size_t k = 2; k <= 8; ++k) CHECK(report.at(k) >= report.at(k - 1));
    CHECK(report.at(8) == 1.0);
    const auto scaled = evaluate(turns, HashScorer(37.0), *sel, selection::PolicyKind::kArgmax);
    CHECK(scaled.recall == report.recall);
  }

  TEST_CASE("sampled evaluation averages repetitions deterministically") {
    std::vector<TurnGroup> turns;
    for (std::size_t i = 0; i < 300; ++i) turns.push_back(synthetic_turn(i, 4, i % 4, 1 + i % 5));
    const auto sel = selector();
    EvalOptions opt;
    opt.seed = 5;
    opt.threads = 4;
    const auto a = evaluate(turns, HashScorer(), *sel, selection::PolicyKind::kSampled, opt);
    opt.threads = 1;
    const auto b = evaluate(turns, HashScorer(), *sel, selection::PolicyKind::kSampled, opt);
    CHECK(a.recall == b.recall);
    CHECK(a.repetitions == 32);
    CHECK(a.recall_stddev[0] > 0.0);
    CHECK(a.r1_by_context.size() == 5);
    for (std::size_t k = 2; k <= 4; ++k) CHECK(a.at(k) >= a.at(k - 1));
    const auto rule = evaluate(turns, HashScorer(), *sel, selection::PolicyKind::kRuleBased, opt);
    CHECK(rule.policy == "rule");

    opt.max_k = 6;  // more than any turn offers: short lists count as hits
    const auto wide = evaluate(turns, HashScorer(), *sel, selection::PolicyKind::kArgmax, opt);
    CHECK(wide.at(5) == 1.0);
    CHECK(wide.at(6) == 1.0);

    const std::vector<EvalReport> reports{a, wide};
    const auto csv = recall_csv(reports);
    CHECK(csv.starts_with("policy,k,recall,stddev\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 + 6);
    const auto prefix = testing::scratch_dir("reports") / "eval";
    write_reports(prefix, reports);
    CHECK(std::filesystem::exists(prefix.string() + ".json"));
    CHECK(std::filesystem::exists(prefix.string() + ".csv"));
    CHECK(a.table().find("R@1") != std::string::npos);
    CHECK_THROWS_AS(evaluate({}, HashScorer(), *sel, selection::PolicyKind::kArgmax), ValidationError);
  }

  TEST_CASE("corpus statistics") {
    const auto single = export_transitions(make_log("one", "a", 5, 8), 4);
    const auto st = corpus_stats(single);
    CHECK(st.conversations == 1);
    CHECK(st.interactions == 5);
    CHECK(st.avg_interactions == 5.0);
    CHECK(st.candidate_counts.at(2) == 1);
    CHECK(st.candidate_counts.at(8) == 4);
    CHECK(st.positives == 5);

    // every turn offers a topic candidate that is never chosen
    std::vector<TransitionTuple> recs;
    for (std::uint32_t t = 0; t < 10; ++t) {
      for (int i = 0; i < 2; ++i) {
        TransitionTuple r;
        r.conversation_id = "x";
        r.turn_index = t;
        r.action = {i == 0 ? K::kTopic : K::kFact, "r", 0};
        r.vote = i;
        recs.push_back(r);
      }
    }
    const auto s2 = corpus_stats(recs);
    CHECK(s2.models.at(K::kTopic).availability == 1.0);
    CHECK(s2.models.at(K::kTopic).selection_given_available == 0.0);
    CHECK(s2.models.at(K::kFact).selection_given_available == 1.0);
    CHECK(s2.models.at(K::kEntity).availability == 0.0);
    CHECK(s2.to_json().at("interactions") == 10);
    CHECK(s2.table().find("topic") != std::string::npos);
  }

  TEST_CASE("records encode into training samples") {
    auto extractor = std::make_shared<features::FeatureExtractor>(testing::shipped_text());
    scoring::InputEncoder encoder(scoring::Architecture::kSmall, extractor);
    const auto recs = export_transitions(make_log("c", "a", 3, 3), 5);
    const auto labeled = labeled_samples(recs, encoder);
    REQUIRE(labeled.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(labeled[i].label == recs[i].vote);
      CHECK(labeled[i].input.features.size() == static_cast<Eigen::Index>(extractor->dimension()));
    }
    const auto q = q_samples(recs, encoder);
    REQUIRE(q.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(q[i].terminal == is_terminal(recs[i]));
      CHECK(q[i].next.size() == recs[i].next_candidates.size());
      CHECK(q[i].reward == recs[i].reward);
    }
  }
}
