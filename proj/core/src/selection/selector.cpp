#include "chorus/selection/selector.hpp"

#include <algorithm>
#include <numeric>

#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::selection {
namespace {

using K = ResponderKind;

bool is_one_of(ResponderKind k, std::initializer_list<ResponderKind> kinds) {
  return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

/// Index drawn with probability proportional to sampling_weights over `pool`.
std::size_t draw(std::span<const Candidate> candidates, const std::vector<std::size_t>& pool,
                 std::mt19937_64& rng) {
  std::vector<double> scores;
  for (std::size_t i : pool) scores.push_back(candidates[i].score);
  const auto w = sampling_weights(scores);
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  return pool[dist(rng)];
}

/// Head followed by every other candidate in descending score order.
std::vector<std::size_t> with_head(std::span<const Candidate> candidates, std::size_t head) {
  std::vector<std::size_t> order{head};
  for (std::size_t i : argmax_order(candidates)) {
    if (i != head) order.push_back(i);
  }
  return order;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRuleBased:
      return "rule";
    case PolicyKind::kArgmax:
      return "argmax";
    case PolicyKind::kSampled:
      return "sampled";
  }
  return "rule";
}

PolicyKind policy_from_string(std::string_view name) {
  if (name == "rule" || name == "rule_based") return PolicyKind::kRuleBased;
  if (name == "argmax") return PolicyKind::kArgmax;
  if (name == "sampled") return PolicyKind::kSampled;
  throw ValidationError("unknown selection policy '" + std::string(name) + "'");
}

void SelectionPolicy::validate() const {
  if (!(low < high)) throw ValidationError("selection thresholds need low < high");
  if (bored_limit < 1) throw ValidationError("bored_limit must be at least 1");
  if (short_word_limit < 1) throw ValidationError("short_word_limit must be at least 1");
}

nlohmann::json SelectionPolicy::to_json() const {
  return {{"kind", to_string(kind)},
          {"high", high},
          {"low", low},
          {"bored_limit", bored_limit},
          {"short_word_limit", short_word_limit}};
}

SelectionPolicy SelectionPolicy::from_json(const nlohmann::json& j) {
  SelectionPolicy p;
  if (j.contains("kind")) p.kind = policy_from_string(j.at("kind").get<std::string>());
  p.high = j.value("high", p.high);
  p.low = j.value("low", p.low);
  p.bored_limit = j.value("bored_limit", p.bored_limit);
  p.short_word_limit = j.value("short_word_limit", p.short_word_limit);
  p.validate();
  return p;
}

std::vector<std::size_t> argmax_order(std::span<const Candidate> candidates) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].score > candidates[b].score; });
  return order;
}

std::vector<double> sampling_weights(std::span<const double> scores) {
  std::vector<double> w(scores.begin(), scores.end());
  if (w.empty()) return w;
  const double lo = *std::min_element(w.begin(), w.end());
  if (lo < 0.0) {
    for (double& v : w) v -= lo;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0.0)) std::fill(w.begin(), w.end(), 1.0);
  return w;
}

std::vector<std::size_t> sampled_order(std::span<const Candidate> candidates, std::mt19937_64& rng) {
  std::vector<std::size_t> pool(candidates.size());
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> order;
  while (!pool.empty()) {
    const std::size_t pick = draw(candidates, pool, rng);
    order.push_back(pick);
    pool.erase(std::find(pool.begin(), pool.end(), pick));
  }
  return order;
}

std::optional<std::size_t> choose_opener(std::span<const Candidate> candidates, std::mt19937_64& rng) {
  std::vector<std::size_t> openers;
  std::optional<std::size_t> fact;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (is_one_of(candidates[i].model, {K::kQuestionGen, K::kEntity})) openers.push_back(i);
    if (candidates[i].model == K::kFact && !fact) fact = i;
  }
  if (!openers.empty()) {
    std::uniform_int_distribution<std::size_t> dist(0, openers.size() - 1);
    return openers[dist(rng)];
  }
  return fact;
}

Selector::Selector(std::shared_ptr<const text::TextResources> text, std::vector<std::string> topic_patterns,
                   SelectionPolicy policy)
    : text_(std::move(text)), policy_(policy) {
  if (!text_) throw ValidationError("selector needs text resources");
  policy_.validate();
  for (const auto& p : topic_patterns) {
    try {
      topic_patterns_.emplace_back(p, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ValidationError("bad topic-question pattern '" + p + "': " + e.what());
    }
  }
}

std::shared_ptr<const Selector> Selector::load(const std::filesystem::path& data_dir,
                                               std::shared_ptr<const text::TextResources> text,
                                               SelectionPolicy policy) {
  const auto lines = text::read_resource_lines(data_dir / "selection" / "topic_questions.txt");
  return std::make_shared<const Selector>(std::move(text), lines, policy);
}

std::uint32_t Selector::update_bored_counter(std::uint32_t counter, std::string_view user_message) const {
  const auto words = text::words_only(text::tokenize(user_message));
  const bool short_reply = words.size() < policy_.short_word_limit;
  const bool only_stop = std::all_of(words.begin(), words.end(),
                                     [&](const std::string& w) { return text_->lexicons.stop_words.contains(w); });
  return (short_reply || only_stop) ? counter + 1 : counter;
}

bool Selector::is_topic_question(std::string_view message) const {
  const std::string m(message);
  return std::any_of(topic_patterns_.begin(), topic_patterns_.end(),
                     [&](const std::regex& re) { return std::regex_search(m, re); });
}

bool Selector::is_question(std::string_view message) const {
  return text::is_wh_question(message, text_->lexicons);
}

bool Selector::is_article_question(std::string_view message, const Article& article) const {
  if (!is_question(message)) return false;
  const auto user = text::tokenize(message);
  for (const auto& tag : text_->tagger.tag(article.text)) {
    if (contains_sequence(user, text::tokenize(tag.surface))) return true;
  }
  return false;
}

Selection Selector::select(const ConversationState& state, std::span<const Candidate> candidates,
                           std::mt19937_64& rng) const {
  return select(state, candidates, rng, policy_.kind);
}

Selection Selector::select(const ConversationState& state, std::span<const Candidate> candidates, std::mt19937_64& rng,
                           PolicyKind kind) const {
  if (candidates.empty()) throw ValidationError("select needs at least one candidate");
  switch (kind) {
    case PolicyKind::kArgmax:
      return Selection{argmax_order(candidates), 0, false};
    case PolicyKind::kSampled:
      return Selection{sampled_order(candidates, rng), 0, false};
    case PolicyKind::kRuleBased:
      return rule_based(state, candidates, rng);
  }
  return Selection{argmax_order(candidates), 0, false};
}

Selection Selector::rule_based(const ConversationState& state, std::span<const Candidate> candidates,
                               std::mt19937_64& rng) const {
  auto of_kinds = [&](std::initializer_list<ResponderKind> kinds, auto keep) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (is_one_of(candidates[i].model, kinds) && keep(candidates[i].score)) out.push_back(i);
    }
    return out;
  };
  auto any = [](double) { return true; };
  auto chosen = [&](std::size_t head, int rule, bool reset = false) {
    return Selection{with_head(candidates, head), rule, reset};
  };

  const Message* user = state.last_human();
  const std::string_view message = user ? std::string_view(user->text) : std::string_view();

  // 1. a pre-defined answer matched the user's message
  if (const auto pool = of_kinds({K::kSimpleAnswers}, any); !pool.empty()) return chosen(pool.front(), 1);
  // 2. the user asks what the article is about
  if (user && is_topic_question(message)) {
    if (const auto pool = of_kinds({K::kTopic}, any); !pool.empty()) return chosen(pool.front(), 2);
  }
  // 3. a question about something the article mentions
  if (user && is_article_question(message, state.article)) {
    if (const auto pool = of_kinds({K::kQuestionAnswer}, any); !pool.empty()) return chosen(pool.front(), 3);
  }
  // 4. the user seems bored: try to re-launch the conversation
  if (state.bored_counter >= policy_.bored_limit) {
    if (const auto pool = of_kinds({K::kQuestionGen, K::kFact, K::kEntity}, any); !pool.empty()) {
      return chosen(draw(candidates, pool, rng), 4, true);
    }
  }
  // 5. a generic responder the scorer is confident about
  {
    const auto pool = of_kinds({K::kHredTwitter, K::kHredReddit, K::kPattern},
                               [&](double s) { return s >= policy_.high && s <= 1.0; });
    if (!pool.empty()) {
      const auto best = *std::max_element(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].score < candidates[b].score;
      });
      return chosen(best, 5);
    }
  }
  auto above_floor = [&](double s) { return s > policy_.low; };
  if (user && is_question(message)) {
    // 6. questions go to the generic and answering responders
    const auto pool = of_kinds({K::kHredTwitter, K::kHredReddit, K::kPattern, K::kQuestionAnswer}, above_floor);
    if (!pool.empty()) return chosen(draw(candidates, pool, rng), 6);
  } else {
    // 7. statements go to the generic and asking responders
    const auto pool =
        of_kinds({K::kHredTwitter, K::kHredReddit, K::kPattern, K::kQuestionGen, K::kEntity}, above_floor);
    if (!pool.empty()) return chosen(draw(candidates, pool, rng), 7);
  }
  // 8. exit door
  if (const auto pool = of_kinds({K::kFact}, any); !pool.empty()) return chosen(pool.front(), 8);
  return Selection{argmax_order(candidates), 0, false};
}

}  // namespace chorus::selection
