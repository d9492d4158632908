#include "chorus/text/entities.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "chorus/model/types.hpp"
#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::text {
namespace {

constexpr std::array<std::pair<EntityKind, std::string_view>, 10> kKindNames{{
    {EntityKind::kPerson, "person"},
    {EntityKind::kOrg, "org"},
    {EntityKind::kGpe, "gpe"},
    {EntityKind::kLoc, "loc"},
    {EntityKind::kProduct, "product"},
    {EntityKind::kEvent, "event"},
    {EntityKind::kWorkOfArt, "work_of_art"},
    {EntityKind::kLanguage, "language"},
    {EntityKind::kDate, "date"},
    {EntityKind::kNorp, "norp"},
}};

constexpr std::array<std::string_view, 12> kMonths{
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

// Capitalized function words that start sentences but never start a name.
constexpr std::array<std::string_view, 14> kLeadingFunctionWords{
    "the", "a", "an", "in", "on", "at", "this", "that", "these", "those", "it", "and", "but", "of"};

constexpr std::array<std::string_view, 5> kConnectors{"of", "the", "and", "de", "&"};

struct Span {
  std::size_t start;
  std::size_t end;
  EntityKind kind;
  int source;  // 0 gazetteer, 1 date, 2 capitalization heuristic
};

bool parse_int(std::string_view s, int& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return false;
  }
  return std::from_chars(s.data(), s.data() + s.size(), out).ec == std::errc{};
}

bool is_year(std::string_view token) {
  int v = 0;
  return token.size() == 4 && parse_int(token, v) && v >= 1000 && v <= 2099;
}

bool is_day(std::string_view token) {
  int v = 0;
  return token.size() <= 2 && parse_int(token, v) && v >= 1 && v <= 31;
}

bool is_month(std::string_view lower) {
  return std::find(kMonths.begin(), kMonths.end(), lower) != kMonths.end();
}

bool is_capitalized(std::string_view token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token.front())) != 0;
}

template <std::size_t N>
bool in_list(const std::array<std::string_view, N>& list, std::string_view v) {
  return std::find(list.begin(), list.end(), v) != list.end();
}

}  // namespace

std::string_view to_string(EntityKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

EntityKind entity_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ValidationError("unknown entity kind: " + std::string(name));
}

EntityTagger EntityTagger::load(const std::filesystem::path& dir) {
  EntityTagger tagger;
  for (const auto& [kind, name] : kKindNames) {
    const auto p = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(p)) continue;
    for (const auto& line : read_resource_lines(p)) tagger.add_entry(kind, line);
  }
  const auto hints = dir / "org_hints.txt";
  if (std::filesystem::exists(hints)) {
    for (const auto& line : read_resource_lines(hints)) tagger.add_org_hint(line);
  }
  return tagger;
}

void EntityTagger::add_entry(EntityKind kind, std::string_view surface) {
  auto tokens = tokenize(surface);
  if (tokens.empty()) return;
  auto& bucket = entries_[tokens.front()];
  bucket.push_back(Entry{std::move(tokens), kind});
}

void EntityTagger::add_org_hint(std::string_view word) { org_hints_.push_back(to_lower(trim(word))); }

std::vector<EntityTag> EntityTagger::tag(std::string_view text) const {
  const auto tokens = tokenize_spans(text);
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(to_lower(t.text));
  const std::size_t n = tokens.size();

  std::vector<Span> spans;

  for (std::size_t i = 0; i < n; ++i) {
    const auto it = entries_.find(lower[i]);
    if (it == entries_.end()) continue;
    for (const auto& e : it->second) {
      if (i + e.tokens.size() > n) continue;
      if (std::equal(e.tokens.begin(), e.tokens.end(), lower.begin() + static_cast<std::ptrdiff_t>(i))) {
        spans.push_back(Span{i, i + e.tokens.size(), e.kind, 0});
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (is_month(lower[i]) && is_capitalized(tokens[i].text)) {
      std::size_t start = i;
      std::size_t end = i + 1;
      if (i > 0 && is_day(lower[i - 1])) start = i - 1;
      if (end < n && is_day(lower[end])) ++end;
      if (end < n && lower[end] == "," && end + 1 < n && is_year(lower[end + 1])) {
        end += 2;
      } else if (end < n && is_year(lower[end])) {
        ++end;
      }
      spans.push_back(Span{start, end, EntityKind::kDate, 1});
    } else if (is_year(lower[i])) {
      spans.push_back(Span{i, i + 1, EntityKind::kDate, 1});
    }
  }

  // Gazetteer and date tokens break capitalized runs so "Many Tibetan" stays a norp.
  std::vector<bool> known(n, false);
  for (const auto& s : spans) std::fill(known.begin() + static_cast<std::ptrdiff_t>(s.start),
                                        known.begin() + static_cast<std::ptrdiff_t>(s.end), true);
  auto free_capital = [&](std::size_t k) { return !known[k] && is_capitalized(tokens[k].text); };

  for (std::size_t i = 0; i < n;) {
    if (!free_capital(i) || is_month(lower[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    std::size_t capitalized = 1;
    while (j < n) {
      if (free_capital(j)) {
        ++capitalized;
        ++j;
      } else if (in_list(kConnectors, lower[j]) && j + 1 < n && free_capital(j + 1)) {
        ++j;
      } else {
        break;
      }
    }
    std::size_t start = i;
    while (start < j && in_list(kLeadingFunctionWords, lower[start])) {
      if (is_capitalized(tokens[start].text)) --capitalized;
      ++start;
    }
    if (capitalized >= 2 && start < j) {
      EntityKind kind = EntityKind::kPerson;
      for (std::size_t k = start; k < j; ++k) {
        if (std::find(org_hints_.begin(), org_hints_.end(), lower[k]) != org_hints_.end()) {
          kind = EntityKind::kOrg;
        }
      }
      spans.push_back(Span{start, j, kind, 2});
    }
    i = j;
  }

  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    const auto la = a.end - a.start;
    const auto lb = b.end - b.start;
    if (la != lb) return la > lb;
    if (a.start != b.start) return a.start < b.start;
    return a.source < b.source;
  });
  std::vector<bool> taken(n, false);
  std::vector<EntityTag> out;
  for (const auto& s : spans) {
    if (std::any_of(taken.begin() + static_cast<std::ptrdiff_t>(s.start),
                    taken.begin() + static_cast<std::ptrdiff_t>(s.end), [](bool b) { return b; })) {
      continue;
    }
    std::fill(taken.begin() + static_cast<std::ptrdiff_t>(s.start),
              taken.begin() + static_cast<std::ptrdiff_t>(s.end), true);
    const auto begin = tokens[s.start].begin;
    const auto end = tokens[s.end - 1].end;
    out.push_back(EntityTag{s.kind, std::string(text.substr(begin, end - begin)), s.start, s.end});
  }
  std::sort(out.begin(), out.end(), [](const EntityTag& a, const EntityTag& b) { return a.start < b.start; });
  return out;
}

}  // namespace chorus::text
