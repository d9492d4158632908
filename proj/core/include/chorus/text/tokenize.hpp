#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chorus::text {

/// A token with its byte range in the source text. Case is preserved.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Case-preserving tokenization. Punctuation becomes separate tokens, contractions
/// are split Penn-style ("don't" -> "do" "n't", "Bob's" -> "Bob" "'s"), and
/// digit groups / decimals / hyphenated words stay whole.
std::vector<Token> tokenize_spans(std::string_view text);

/// Lowercased tokens of `text`.
std::vector<std::string> tokenize(std::string_view text);

/// True for tokens made only of ASCII punctuation.
bool is_punctuation(std::string_view token);

/// Drops punctuation tokens.
std::vector<std::string> words_only(const std::vector<std::string>& tokens);

/// Space-joins tokens. tokenize(join_tokens(tokenize(x))) == tokenize(x).
std::string join_tokens(const std::vector<std::string>& tokens);

std::string to_lower(std::string_view text);

}  // namespace chorus::text
