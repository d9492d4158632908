#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::selection {

/// First bot message of every conversation.
inline constexpr std::string_view kGreeting =
    "Hello! I hope you're doing well. I am doing fantastic today! Let me go through the article real quick and we "
    "will start talking about it.";

enum class PolicyKind { kRuleBased, kArgmax, kSampled };
std::string_view to_string(PolicyKind kind);
PolicyKind policy_from_string(std::string_view name);

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::kRuleBased;
  double high = 0.75;  // rule 5 lower bound
  double low = 0.25;  // rules 6-7 floor (exclusive)
  std::uint32_t bored_limit = 2;
  std::size_t short_word_limit = 3;  // fewer words than this counts as a short reply

  void validate() const;
  nlohmann::json to_json() const;
  static SelectionPolicy from_json(const nlohmann::json& j);
};

/// Outcome of one selection: a ranking of candidate indices, head first.
struct Selection {
  std::vector<std::size_t> order;
  /// Rule (1..8) that chose the head under rule-based selection; 0 when the
  /// head came from argmax or sampling.
  int rule = 0;
  /// Rule 4 fired; the caller resets the bored counter.
  bool reset_bored = false;

  std::size_t head() const { return order.front(); }
};

/// Descending score; ties keep input order.
std::vector<std::size_t> argmax_order(std::span<const Candidate> candidates);

/// Selection weights: scores as given when all are non-negative, otherwise
/// shifted by the minimum. A zero total yields uniform weights.
std::vector<double> sampling_weights(std::span<const double> scores);

/// Repeated weighted draws without replacement over all candidates.
std::vector<std::size_t> sampled_order(std::span<const Candidate> candidates, std::mt19937_64& rng);

/// Opening line after the greeting: a question-generator or entity candidate,
/// uniformly; the fact candidate when neither exists; nullopt when none does.
std::optional<std::size_t> choose_opener(std::span<const Candidate> candidates, std::mt19937_64& rng);

/// Chooses the reply for a turn under a policy. Stateless apart from the
/// caller-supplied random stream, so safe to share between threads.
class Selector {
 public:
  Selector(std::shared_ptr<const text::TextResources> text, std::vector<std::string> topic_patterns,
           SelectionPolicy policy = {});

  /// Reads `<data_dir>/selection/topic_questions.txt`.
  static std::shared_ptr<const Selector> load(const std::filesystem::path& data_dir,
                                              std::shared_ptr<const text::TextResources> text,
                                              SelectionPolicy policy = {});

  const SelectionPolicy& policy() const { return policy_; }

  /// Ranks candidates. Throws ValidationError on an empty list.
  Selection select(const ConversationState& state, std::span<const Candidate> candidates,
                   std::mt19937_64& rng) const;
  Selection select(const ConversationState& state, std::span<const Candidate> candidates, std::mt19937_64& rng,
                   PolicyKind kind) const;

  /// counter + 1 when the message is short or only stop-words, else counter.
  std::uint32_t update_bored_counter(std::uint32_t counter, std::string_view user_message) const;

  bool is_topic_question(std::string_view message) const;
  /// Ends with '?', has a wh-word and mentions an entity of the article.
  bool is_article_question(std::string_view message, const Article& article) const;
  /// Ends with '?' and has a wh-word.
  bool is_question(std::string_view message) const;

 private:
  Selection rule_based(const ConversationState& state, std::span<const Candidate> candidates,
                       std::mt19937_64& rng) const;

  std::shared_ptr<const text::TextResources> text_;
  std::vector<std::regex> topic_patterns_;
  SelectionPolicy policy_;
};

}  // namespace chorus::selection
