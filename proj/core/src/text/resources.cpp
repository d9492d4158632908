#include "chorus/text/resources.hpp"

namespace chorus::text {

std::shared_ptr<const TextResources> TextResources::load(const std::filesystem::path& root,
                                                         const std::filesystem::path& embedding_file) {
  auto res = std::make_shared<TextResources>();
  res->lexicons = Lexicons::load(root / "lexicons");
  res->tagger = EntityTagger::load(root / "gazetteers");
  if (!embedding_file.empty()) {
    res->embeddings = EmbeddingStore::load(embedding_file);
  } else {
    res->embeddings = EmbeddingStore::synthetic(collect_vocabulary(root), 300, kSyntheticEmbeddingSeed);
  }
  return res;
}

}  // namespace chorus::text
