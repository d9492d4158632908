#include "chorus/text/tokenize.hpp"

#include <array>
#include <cctype>

namespace chorus::text {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

constexpr std::array<std::string_view, 6> kClitics{"s", "m", "d", "re", "ve", "ll"};

bool is_clitic_suffix(std::string_view lower) {
  for (auto c : kClitics) {
    if (lower == c) return true;
  }
  return false;
}

// Length of a clitic ("'s", "'ll", ...) starting at `pos` (which holds the
// apostrophe), or 0 if the bytes there do not form a standalone clitic.
std::size_t clitic_length_at(std::string_view text, std::size_t pos) {
  std::size_t j = pos + 1;
  while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
  if (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) return 0;
  if (!is_clitic_suffix(to_lower(text.substr(pos + 1, j - pos - 1)))) return 0;
  return j - pos;
}

void push_word(std::string_view text, std::size_t begin, std::size_t end, std::vector<Token>& out) {
  const std::string_view word = text.substr(begin, end - begin);
  const std::string lower = to_lower(word);
  if (lower.size() > 3 && lower.ends_with("n't")) {
    const std::size_t cut = end - 3;
    out.push_back(Token{std::string(text.substr(begin, cut - begin)), begin, cut});
    out.push_back(Token{std::string(text.substr(cut, 3)), cut, end});
    return;
  }
  const auto apos = word.rfind('\'');
  if (apos != std::string_view::npos && apos > 0 && is_clitic_suffix(lower.substr(apos + 1))) {
    const std::size_t cut = begin + apos;
    out.push_back(Token{std::string(text.substr(begin, cut - begin)), begin, cut});
    out.push_back(Token{std::string(text.substr(cut, end - cut)), cut, end});
    return;
  }
  out.push_back(Token{std::string(word), begin, end});
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> tokenize_spans(std::string_view text) {
  std::vector<Token> out;
  const std::size_t n = text.size();
  std::size_t i = 0;
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  while (i < n) {
    if (std::isspace(at(i))) {
      ++i;
      continue;
    }
    if (is_word_byte(at(i))) {
      std::size_t j = i;
      while (j < n) {
        if (is_word_byte(at(j))) {
          ++j;
          continue;
        }
        const char c = text[j];
        const bool next_word = j + 1 < n && is_word_byte(at(j + 1));
        if (!next_word) break;
        if (c == '-' || c == '\'' || c == '_' || c == '.') {
          ++j;
          continue;
        }
        if (c == ',' && is_digit(at(j - 1)) && is_digit(at(j + 1))) {
          ++j;
          continue;
        }
        break;
      }
      push_word(text, i, j, out);
      i = j;
      continue;
    }
    if (text[i] == '\'') {
      if (const auto len = clitic_length_at(text, i); len > 0) {
        out.push_back(Token{std::string(text.substr(i, len)), i, i + len});
        i += len;
        continue;
      }
    }
    out.push_back(Token{std::string(1, text[i]), i, i + 1});
    ++i;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_spans(text)) out.push_back(to_lower(t.text));
  return out;
}

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  for (unsigned char c : token) {
    if (is_word_byte(c)) return false;
  }
  return true;
}

std::vector<std::string> words_only(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!is_punctuation(t)) out.push_back(t);
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace chorus::text
