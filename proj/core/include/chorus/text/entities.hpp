#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chorus::text {

enum class EntityKind {
  kPerson,
  kOrg,
  kGpe,
  kLoc,
  kProduct,
  kEvent,
  kWorkOfArt,
  kLanguage,
  kDate,
  kNorp,
};

inline constexpr EntityKind kAllEntityKinds[] = {
    EntityKind::kPerson, EntityKind::kOrg,       EntityKind::kGpe,      EntityKind::kLoc,
    EntityKind::kProduct, EntityKind::kEvent,    EntityKind::kWorkOfArt, EntityKind::kLanguage,
    EntityKind::kDate,   EntityKind::kNorp,
};

/// Stable lowercase names ("person", "work_of_art", ...), also used as gazetteer file stems.
std::string_view to_string(EntityKind kind);
EntityKind entity_kind_from_string(std::string_view name);

struct EntityTag {
  EntityKind kind = EntityKind::kPerson;
  std::string surface;
  /// Token offsets [start, end) into tokenize_spans(text).
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const EntityTag&) const = default;
};

/// Gazetteer and pattern tagger. Candidate spans come from (a) gazetteer entries,
/// (b) years and month-name dates, (c) runs of two or more capitalized tokens,
/// classified as org when they contain an organization hint word and person otherwise.
/// Overlaps are resolved longest-first, then leftmost.
class EntityTagger {
 public:
  EntityTagger() = default;

  /// Reads `<dir>/<kind>.txt` for each kind, plus optional `org_hints.txt`.
  static EntityTagger load(const std::filesystem::path& dir);

  void add_entry(EntityKind kind, std::string_view surface);
  void add_org_hint(std::string_view word);

  std::vector<EntityTag> tag(std::string_view text) const;

 private:
  struct Entry {
    std::vector<std::string> tokens;  // lowercased
    EntityKind kind;
  };
  // Keyed by lowercased first token.
  std::map<std::string, std::vector<Entry>, std::less<>> entries_;
  std::vector<std::string> org_hints_;
};

}  // namespace chorus::text
