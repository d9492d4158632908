#include "chorus/responders/pattern_engine.hpp"

#include <algorithm>
#include <sstream>

#include "chorus/model/types.hpp"
#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::responders {
namespace {

bool is_wildcard(const std::string& t) { return t == "*" || t == "_"; }

int pattern_class(const PatternRule& r) {
  const bool underscore = std::find(r.pattern.begin(), r.pattern.end(), "_") != r.pattern.end();
  const bool star = std::find(r.pattern.begin(), r.pattern.end(), "*") != r.pattern.end();
  if (underscore) return 0;
  if (!star) return 1;
  return 2;
}

bool match_from(const std::vector<std::string>& pattern, std::size_t pi, const std::vector<std::string>& input,
                std::size_t ii, std::vector<std::string>& captures) {
  if (pi == pattern.size()) return ii == input.size();
  if (!is_wildcard(pattern[pi])) {
    if (ii < input.size() && input[ii] == pattern[pi]) return match_from(pattern, pi + 1, input, ii + 1, captures);
    return false;
  }
  // Shortest capture first keeps the first wildcard minimal.
  for (std::size_t end = ii + 1; end <= input.size(); ++end) {
    std::vector<std::string> span(input.begin() + static_cast<std::ptrdiff_t>(ii),
                                  input.begin() + static_cast<std::ptrdiff_t>(end));
    captures.push_back(text::join_tokens(span));
    if (match_from(pattern, pi + 1, input, end, captures)) return true;
    captures.pop_back();
  }
  return false;
}

std::string substitute(const std::string& tmpl, const std::vector<std::string>& captures) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '$' && i + 1 < tmpl.size() && tmpl[i + 1] >= '1' && tmpl[i + 1] <= '9') {
      const auto idx = static_cast<std::size_t>(tmpl[i + 1] - '1');
      if (idx < captures.size()) out += captures[idx];
      ++i;
    } else {
      out.push_back(tmpl[i]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize_pattern_input(std::string_view text) {
  return text::words_only(text::tokenize(text));
}

std::optional<std::vector<std::string>> match_pattern(const std::vector<std::string>& pattern,
                                                      const std::vector<std::string>& input) {
  std::vector<std::string> captures;
  if (match_from(pattern, 0, input, 0, captures)) return captures;
  return std::nullopt;
}

std::vector<PatternRule> parse_rules(std::string_view text) {
  std::vector<PatternRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto bar1 = t.find('|');
    const auto bar2 = bar1 == std::string_view::npos ? bar1 : t.find('|', bar1 + 1);
    if (bar2 == std::string_view::npos) {
      throw ValidationError("rule line " + std::to_string(line_no) + ": expected 'priority | pattern | template'");
    }
    PatternRule rule;
    try {
      rule.priority = std::stoi(std::string(trim(t.substr(0, bar1))));
    } catch (const std::exception&) {
      throw ValidationError("rule line " + std::to_string(line_no) + ": bad priority");
    }
    std::istringstream pattern_words{std::string(trim(t.substr(bar1 + 1, bar2 - bar1 - 1)))};
    std::string word;
    while (pattern_words >> word) {
      if (is_wildcard(word)) {
        rule.pattern.push_back(word);
      } else {
        for (auto& tok : normalize_pattern_input(word)) rule.pattern.push_back(std::move(tok));
      }
    }
    if (rule.pattern.empty()) throw ValidationError("rule line " + std::to_string(line_no) + ": empty pattern");
    rule.response = std::string(trim(t.substr(bar2 + 1)));
    if (rule.response.empty()) throw ValidationError("rule line " + std::to_string(line_no) + ": empty template");
    rule.file_order = rules.size();
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<PatternRule> load_rules(const std::filesystem::path& path) {
  std::ostringstream buf;
  for (const auto& line : text::read_resource_lines(path)) buf << line << '\n';
  return parse_rules(buf.str());
}

PatternEngine::PatternEngine(std::vector<PatternRule> rules, bool legacy_quote_suppression)
    : rules_(std::move(rules)), legacy_quote_suppression_(legacy_quote_suppression) {
  std::stable_sort(rules_.begin(), rules_.end(), [](const PatternRule& a, const PatternRule& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    const int ca = pattern_class(a);
    const int cb = pattern_class(b);
    if (ca != cb) return ca < cb;
    return a.file_order < b.file_order;
  });
}

std::optional<std::string> PatternEngine::respond(std::string_view input) const {
  auto reply = respond_depth(input, 0);
  if (reply && legacy_quote_suppression_ && reply->find('"') != std::string::npos) return std::nullopt;
  return reply;
}

std::optional<std::string> PatternEngine::respond_depth(std::string_view input, int depth) const {
  const auto words = normalize_pattern_input(input);
  if (words.empty()) return std::nullopt;
  for (const auto& rule : rules_) {
    const auto captures = match_pattern(rule.pattern, words);
    if (!captures) continue;
    const std::string reply = substitute(rule.response, *captures);
    constexpr std::string_view kSrai = "@srai ";
    if (reply.starts_with(kSrai)) {
      if (depth >= 1) return std::nullopt;
      return respond_depth(std::string_view(reply).substr(kSrai.size()), depth + 1);
    }
    return reply;
  }
  return std::nullopt;
}

}  // namespace chorus::responders
