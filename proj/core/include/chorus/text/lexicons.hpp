#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace chorus::text {

using WordSet = std::unordered_set<std::string>;

/// Word lists used by the message heuristics. All entries are lowercase single tokens.
struct Lexicons {
  WordSet stop_words;
  WordSet intensifiers;
  WordSet confusion_words;
  WordSet profanity;
  WordSet negations;
  WordSet wh_words;
  WordSet greeting_words;
  WordSet affirmative_words;
  WordSet negative_words;
  WordSet request_words;
  WordSet politic_words;
  std::unordered_map<std::string, double> sentiment_polarity;

  /// Loads `<dir>/<name>.txt` for every set and `<dir>/sentiment.tsv`
  /// ("token<TAB>polarity"). Missing files leave the set empty.
  static Lexicons load(const std::filesystem::path& dir);

  /// Throws ValidationError on empty entries or polarities outside [-1, 1].
  void validate() const;
};

/// One entry per line, '#' starts a comment, blank lines ignored. Entries are lowercased.
WordSet load_word_list(const std::filesystem::path& path);
std::vector<std::string> read_resource_lines(const std::filesystem::path& path);

enum class MessageType { kGreeting, kQuestion, kAffirmative, kNegative, kRequest, kPolitic };
inline constexpr MessageType kAllMessageTypes[] = {
    MessageType::kGreeting, MessageType::kQuestion, MessageType::kAffirmative,
    MessageType::kNegative, MessageType::kRequest,  MessageType::kPolitic,
};
std::string_view to_string(MessageType type);

std::set<MessageType> classify_message_types(std::string_view text, const Lexicons& lex);

/// True when the text ends with '?' (ignoring trailing space) and contains a wh-word.
bool is_wh_question(std::string_view text, const Lexicons& lex);

enum class Sentiment { kNegative, kNeutral, kPositive };
std::string_view to_string(Sentiment s);

/// Mean polarity over word tokens; a polar word preceded by a negation within
/// three tokens is flipped. |mean| <= 0.05 is neutral.
Sentiment sentiment(std::string_view text, const Lexicons& lex);
double sentiment_score(std::span<const std::string> tokens, const Lexicons& lex);

/// A message is generic when every word token is a stop-word or shorter than 3 characters.
bool is_generic(std::span<const std::string> tokens, const Lexicons& lex);

bool contains_any(std::span<const std::string> tokens, const WordSet& set);
/// Any token listed in the wh-word set (what, who, how, ...).
bool has_wh_word(std::span<const std::string> tokens, const Lexicons& lex);
/// Any token literally starting with "wh".
bool has_wh_prefix_word(std::span<const std::string> tokens);

}  // namespace chorus::text
