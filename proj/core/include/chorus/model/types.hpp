#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chorus {

/// Thrown when an input violates an operation's precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a caller breaks an API contract (wrong call order, replayed ids).
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The nine generators of the ensemble. Names are stable and appear in data files.
enum class ResponderKind : std::uint8_t {
  kHredTwitter,
  kHredReddit,
  kQuestionGen,
  kQuestionAnswer,
  kTopic,
  kFact,
  kEntity,
  kSimpleAnswers,
  kPattern,
};

inline constexpr ResponderKind kAllResponders[] = {
    ResponderKind::kHredTwitter, ResponderKind::kHredReddit, ResponderKind::kQuestionGen,
    ResponderKind::kQuestionAnswer, ResponderKind::kTopic, ResponderKind::kFact,
    ResponderKind::kEntity, ResponderKind::kSimpleAnswers, ResponderKind::kPattern,
};

std::string_view to_string(ResponderKind kind);
/// Throws ValidationError for names outside the registered set.
ResponderKind responder_from_string(std::string_view name);

struct Article {
  std::string id;
  std::string text;
  std::vector<std::string> sentences;

  /// Builds an article and splits `text` into sentences. Throws on empty text.
  static Article from_text(std::string id, std::string text);

  bool operator==(const Article&) const = default;
};

/// Splits on terminal punctuation followed by whitespace; keeps the punctuation.
std::vector<std::string> split_sentences(std::string_view text);

enum class Speaker : std::uint8_t { kHuman, kBot };

std::string_view to_string(Speaker speaker);
Speaker speaker_from_string(std::string_view name);

struct Message {
  Speaker speaker = Speaker::kHuman;
  std::string text;
  std::uint32_t turn_index = 0;

  bool operator==(const Message&) const = default;
};

struct ConversationState {
  std::string conversation_id;
  Article article;
  std::vector<Message> history;
  std::uint32_t bored_counter = 0;

  /// Appends with the next turn index. Throws ValidationError on blank text.
  void append(Speaker speaker, std::string text);
  /// Last message spoken by the human, if any.
  const Message* last_human() const;
  std::uint32_t next_turn_index() const;
  /// Throws ValidationError when an invariant is broken.
  void validate() const;

  bool operator==(const ConversationState&) const = default;
};

struct Candidate {
  ResponderKind model = ResponderKind::kFact;
  std::string text;
  double score = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// One (s, a, r, s', next candidates) record. `next_state` is empty for terminal tuples.
struct TransitionTuple {
  std::string conversation_id;
  std::uint32_t turn_index = 0;
  ConversationState state;
  Candidate action;
  double reward = 0.0;
  int vote = 0;
  std::optional<int> final_rating;
  std::optional<ConversationState> next_state;
  std::vector<Candidate> next_candidates;

  bool operator==(const TransitionTuple&) const = default;
};

/// Reward for a candidate given its vote and the end-of-conversation rating (1..5).
double shape_reward(int vote, int final_rating);

bool is_terminal(const TransitionTuple& tuple);

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

}  // namespace chorus
