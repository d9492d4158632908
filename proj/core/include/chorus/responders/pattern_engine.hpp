#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chorus::responders {

/// An AIML-style rule. Pattern tokens are lowercase words or the wildcards
/// "_" and "*", each matching one or more input words. The template may
/// reference captures as $1..$9, or start with "@srai " to re-enter matching
/// with the rest of the template as input (one level deep).
struct PatternRule {
  int priority = 0;
  std::vector<std::string> pattern;
  std::string response;
  std::size_t file_order = 0;
};

/// Parses "priority | PATTERN | template" lines ('#' comments allowed).
std::vector<PatternRule> parse_rules(std::string_view text);
std::vector<PatternRule> load_rules(const std::filesystem::path& path);

class PatternEngine {
 public:
  explicit PatternEngine(std::vector<PatternRule> rules, bool legacy_quote_suppression = false);

  /// Reply of the best matching rule. Rules are tried by descending priority,
  /// then "_" patterns, exact patterns, "*" patterns, then file order.
  std::optional<std::string> respond(std::string_view input) const;

  std::size_t size() const { return rules_.size(); }

 private:
  std::optional<std::string> respond_depth(std::string_view input, int depth) const;

  std::vector<PatternRule> rules_;
  bool legacy_quote_suppression_;
};

/// Input normalization shared by patterns and messages: lowercased word tokens.
std::vector<std::string> normalize_pattern_input(std::string_view text);

/// Captures for each wildcard when `pattern` matches `input` in full.
std::optional<std::vector<std::string>> match_pattern(const std::vector<std::string>& pattern,
                                                      const std::vector<std::string>& input);

}  // namespace chorus::responders
