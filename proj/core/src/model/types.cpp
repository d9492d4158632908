#include "chorus/model/types.hpp"

#include <array>
#include <cctype>
#include <string>
#include <utility>

namespace chorus {
namespace {

constexpr std::array<std::pair<ResponderKind, std::string_view>, 9> kResponderNames{{
    {ResponderKind::kHredTwitter, "hred_twitter"},
    {ResponderKind::kHredReddit, "hred_reddit"},
    {ResponderKind::kQuestionGen, "question_gen"},
    {ResponderKind::kQuestionAnswer, "question_answer"},
    {ResponderKind::kTopic, "topic"},
    {ResponderKind::kFact, "fact"},
    {ResponderKind::kEntity, "entity"},
    {ResponderKind::kSimpleAnswers, "simple_answers"},
    {ResponderKind::kPattern, "pattern"},
}};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view to_string(ResponderKind kind) {
  for (const auto& [k, name] : kResponderNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ResponderKind responder_from_string(std::string_view name) {
  for (const auto& [k, n] : kResponderNames) {
    if (n == name) return k;
  }
  throw ValidationError("unknown responder name: " + std::string(name));
}

std::string_view to_string(Speaker speaker) { return speaker == Speaker::kHuman ? "human" : "bot"; }

Speaker speaker_from_string(std::string_view name) {
  if (name == "human") return Speaker::kHuman;
  if (name == "bot") return Speaker::kBot;
  throw ValidationError("unknown speaker: " + std::string(name));
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    current.push_back(c);
    const bool terminal = c == '.' || c == '!' || c == '?';
    const bool boundary = i + 1 == text.size() || is_space(text[i + 1]);
    if (terminal && boundary) {
      // Abbreviation guard: a single capital letter before the dot ("J. Smith").
      const auto stripped = trim(current);
      const bool initial = c == '.' && stripped.size() >= 2 &&
                           std::isupper(static_cast<unsigned char>(stripped[stripped.size() - 2])) &&
                           (stripped.size() == 2 || is_space(stripped[stripped.size() - 3]));
      if (!initial) {
        if (!stripped.empty()) out.emplace_back(stripped);
        current.clear();
      }
    }
  }
  const auto rest = trim(current);
  if (!rest.empty()) out.emplace_back(rest);
  return out;
}

Article Article::from_text(std::string id, std::string text) {
  if (trim(text).empty()) throw ValidationError("article text is empty");
  Article a;
  a.id = std::move(id);
  a.sentences = split_sentences(text);
  a.text = std::move(text);
  return a;
}

void ConversationState::append(Speaker speaker, std::string text) {
  if (trim(text).empty()) throw ValidationError("message text is empty");
  history.push_back(Message{speaker, std::move(text), next_turn_index()});
}

const Message* ConversationState::last_human() const {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->speaker == Speaker::kHuman) return &*it;
  }
  return nullptr;
}

std::uint32_t ConversationState::next_turn_index() const {
  return history.empty() ? 0 : history.back().turn_index + 1;
}

void ConversationState::validate() const {
  if (trim(article.text).empty()) throw ValidationError("article text is empty");
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (trim(history[i].text).empty()) throw ValidationError("blank message in history");
    if (i > 0 && history[i].turn_index <= history[i - 1].turn_index) {
      throw ValidationError("turn_index not strictly increasing");
    }
  }
  if (bored_counter > history.size()) throw ValidationError("bored_counter exceeds history length");
}

double shape_reward(int vote, int final_rating) {
  if (final_rating < 1 || final_rating > 5) {
    throw ValidationError("final rating must be in 1..5, got " + std::to_string(final_rating));
  }
  if (vote == 0) return 0.0;
  if (vote != 1) throw ValidationError("vote must be 0 or 1");
  if (final_rating <= 2) return 0.2;
  if (final_rating <= 4) return 0.8;
  return 1.0;
}

bool is_terminal(const TransitionTuple& tuple) { return tuple.next_candidates.empty(); }

}  // namespace chorus
