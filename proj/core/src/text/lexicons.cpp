#include "chorus/text/lexicons.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "chorus/model/types.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::text {

std::vector<std::string> read_resource_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open resource file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

WordSet load_word_list(const std::filesystem::path& path) {
  WordSet out;
  for (const auto& line : read_resource_lines(path)) out.insert(to_lower(line));
  return out;
}

Lexicons Lexicons::load(const std::filesystem::path& dir) {
  Lexicons lex;
  auto maybe = [&](const char* name, WordSet& target) {
    const auto p = dir / (std::string(name) + ".txt");
    if (std::filesystem::exists(p)) target = load_word_list(p);
  };
  maybe("stop_words", lex.stop_words);
  maybe("intensifiers", lex.intensifiers);
  maybe("confusion_words", lex.confusion_words);
  maybe("profanity", lex.profanity);
  maybe("negations", lex.negations);
  maybe("wh_words", lex.wh_words);
  maybe("greeting_words", lex.greeting_words);
  maybe("affirmative_words", lex.affirmative_words);
  maybe("negative_words", lex.negative_words);
  maybe("request_words", lex.request_words);
  maybe("politic_words", lex.politic_words);
  const auto sent = dir / "sentiment.tsv";
  if (std::filesystem::exists(sent)) {
    for (const auto& line : read_resource_lines(sent)) {
      std::istringstream fields(line);
      std::string token;
      double polarity = 0.0;
      if (!(fields >> token >> polarity)) {
        throw ValidationError("bad sentiment line: " + line);
      }
      lex.sentiment_polarity[to_lower(token)] = polarity;
    }
  }
  lex.validate();
  return lex;
}

void Lexicons::validate() const {
  for (const WordSet* s : {&stop_words, &intensifiers, &confusion_words, &profanity, &negations,
                           &wh_words, &greeting_words, &affirmative_words, &negative_words,
                           &request_words, &politic_words}) {
    if (s->contains("")) throw ValidationError("lexicon contains an empty entry");
  }
  for (const auto& [token, p] : sentiment_polarity) {
    if (token.empty() || !(p >= -1.0 && p <= 1.0)) {
      throw ValidationError("sentiment polarity out of [-1,1] for '" + token + "'");
    }
  }
}

std::string_view to_string(MessageType type) {
  switch (type) {
    case MessageType::kGreeting: return "greeting";
    case MessageType::kQuestion: return "question";
    case MessageType::kAffirmative: return "affirmative";
    case MessageType::kNegative: return "negative";
    case MessageType::kRequest: return "request";
    case MessageType::kPolitic: return "politic";
  }
  return "unknown";
}

std::string_view to_string(Sentiment s) {
  switch (s) {
    case Sentiment::kNegative: return "negative";
    case Sentiment::kNeutral: return "neutral";
    case Sentiment::kPositive: return "positive";
  }
  return "unknown";
}

bool contains_any(std::span<const std::string> tokens, const WordSet& set) {
  for (const auto& t : tokens) {
    if (set.contains(t)) return true;
  }
  return false;
}

bool has_wh_word(std::span<const std::string> tokens, const Lexicons& lex) {
  for (const auto& t : tokens) {
    if (lex.wh_words.contains(t)) return true;
  }
  return false;
}

bool has_wh_prefix_word(std::span<const std::string> tokens) {
  for (const auto& t : tokens) {
    if (t.size() > 2 && t.starts_with("wh")) return true;
  }
  return false;
}

bool is_wh_question(std::string_view text, const Lexicons& lex) {
  const auto t = trim(text);
  if (t.empty() || t.back() != '?') return false;
  const auto tokens = tokenize(t);
  return has_wh_word(tokens, lex);
}

std::set<MessageType> classify_message_types(std::string_view text, const Lexicons& lex) {
  std::set<MessageType> out;
  const auto tokens = tokenize(text);
  bool question = text.find('?') != std::string_view::npos;
  // A wh-word leading a clause also marks a question.
  bool clause_start = true;
  for (const auto& t : tokens) {
    if (is_punctuation(t)) {
      clause_start = t == "." || t == "," || t == ";" || t == ":" || t == "!" || t == "?";
      continue;
    }
    if (clause_start && lex.wh_words.contains(t)) question = true;
    clause_start = false;
  }
  if (question) out.insert(MessageType::kQuestion);
  if (contains_any(tokens, lex.greeting_words)) out.insert(MessageType::kGreeting);
  if (contains_any(tokens, lex.affirmative_words)) out.insert(MessageType::kAffirmative);
  if (contains_any(tokens, lex.negative_words)) out.insert(MessageType::kNegative);
  if (contains_any(tokens, lex.request_words)) out.insert(MessageType::kRequest);
  if (contains_any(tokens, lex.politic_words)) out.insert(MessageType::kPolitic);
  return out;
}

double sentiment_score(std::span<const std::string> tokens, const Lexicons& lex) {
  double total = 0.0;
  int words = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_punctuation(tokens[i])) continue;
    ++words;
    const auto it = lex.sentiment_polarity.find(tokens[i]);
    if (it == lex.sentiment_polarity.end()) continue;
    double p = it->second;
    for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
      if (lex.negations.contains(tokens[i - back])) {
        p = -p;
        break;
      }
    }
    total += p;
  }
  return words == 0 ? 0.0 : total / words;
}

Sentiment sentiment(std::string_view text, const Lexicons& lex) {
  const auto tokens = tokenize(text);
  const double s = sentiment_score(tokens, lex);
  if (s > 0.05) return Sentiment::kPositive;
  if (s < -0.05) return Sentiment::kNegative;
  return Sentiment::kNeutral;
}

bool is_generic(std::span<const std::string> tokens, const Lexicons& lex) {
  for (const auto& t : tokens) {
    if (is_punctuation(t)) continue;
    if (t.size() >= 3 && !lex.stop_words.contains(t)) return false;
  }
  return true;
}

}  // namespace chorus::text
