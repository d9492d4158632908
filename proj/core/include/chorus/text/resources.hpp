#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "chorus/text/embeddings.hpp"
#include "chorus/text/entities.hpp"
#include "chorus/text/lexicons.hpp"

namespace chorus::text {

inline constexpr std::uint64_t kSyntheticEmbeddingSeed = 20180101;

/// The immutable NLP resources shared by features, responders and selection.
struct TextResources {
  EmbeddingStore embeddings{300};
  Lexicons lexicons;
  EntityTagger tagger;

  /// Loads `<root>/lexicons/`, `<root>/gazetteers/` and the embedding file.
  /// An empty `embedding_file` yields synthetic 300-dimensional vectors for
  /// the vocabulary of every text file under `root`.
  static std::shared_ptr<const TextResources> load(const std::filesystem::path& root,
                                                   const std::filesystem::path& embedding_file);
};

}  // namespace chorus::text
