#include "chorus/features/extractor.hpp"

#include <algorithm>
#include <set>

#include "chorus/text/tokenize.hpp"

namespace chorus::features {
namespace {

using text::EmbeddingStore;
using text::Lexicons;

constexpr const char* kPairs[] = {"ctx", "art"};
constexpr const char* kSides[] = {"cand", "user"};

std::vector<std::string> content_words(const std::vector<std::string>& words, const Lexicons& lex) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    if (!lex.stop_words.contains(w)) out.push_back(w);
  }
  return out;
}

std::set<std::string> ngram_set(const std::vector<std::string>& words, std::size_t n) {
  std::set<std::string> out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key = words[i];
    for (std::size_t k = 1; k < n; ++k) key += '\x1f' + words[i + k];
    out.insert(std::move(key));
  }
  return out;
}

double overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t count = 0;
  for (const auto& x : a) count += b.contains(x) ? 1 : 0;
  return static_cast<double>(count);
}

std::vector<std::string> entity_surfaces(std::string_view text, const text::EntityTagger& tagger) {
  std::set<std::string> uniq;
  for (const auto& e : tagger.tag(text)) uniq.insert(text::to_lower(e.surface));
  return {uniq.begin(), uniq.end()};
}

// Quantities computed once per side (candidate, last user message).
struct MessageView {
  bool present = false;
  std::vector<std::string> words;
  std::string raw;
};

class Writer {
 public:
  Writer(const FeatureManifest& m, Eigen::VectorXd& v) : manifest_(m), values_(v) {}
  void set(std::string_view name, double x) { values_[static_cast<Eigen::Index>(manifest_.entry(name).offset)] = x; }
  void set_block(std::string_view name, const Eigen::VectorXd& x) {
    const auto& e = manifest_.entry(name);
    values_.segment(static_cast<Eigen::Index>(e.offset), static_cast<Eigen::Index>(e.length)) = x;
  }

 private:
  const FeatureManifest& manifest_;
  Eigen::VectorXd& values_;
};

}  // namespace

std::size_t FeatureManifest::total() const {
  std::size_t sum = 0;
  for (const auto& e : layout) sum += e.length;
  return sum;
}

const LayoutEntry& FeatureManifest::entry(std::string_view name) const {
  for (const auto& e : layout) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no feature named " + std::string(name));
}

nlohmann::json FeatureManifest::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["embedding_dimension"] = embedding_dimension;
  j["total"] = total();
  auto& arr = j["features"] = nlohmann::json::array();
  for (const auto& e : layout) {
    arr.push_back({{"name", e.name}, {"offset", e.offset}, {"length", e.length}});
  }
  return j;
}

FeatureManifest FeatureManifest::from_json(const nlohmann::json& j) {
  FeatureManifest m;
  m.embedding_dimension = j.at("embedding_dimension").get<int>();
  for (const auto& e : j.at("features")) {
    m.layout.push_back(LayoutEntry{e.at("name").get<std::string>(), e.at("offset").get<std::size_t>(),
                                   e.at("length").get<std::size_t>()});
  }
  if (j.contains("total") && j.at("total").get<std::size_t>() != m.total()) {
    throw ValidationError("feature manifest total does not match its layout");
  }
  return m;
}

FeatureManifest feature_manifest(int embedding_dimension) {
  FeatureManifest m;
  m.embedding_dimension = embedding_dimension;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t length = 1) {
    m.layout.push_back(LayoutEntry{std::move(name), offset, length});
    offset += length;
  };
  const auto d = static_cast<std::size_t>(embedding_dimension);
  add("emb_candidate", d);
  add("emb_context", d);
  add("emb_article", d);
  for (const char* pair : kPairs) {
    for (const char* metric : {"cosine", "extrema", "greedy"}) {
      add(std::string("sim_") + metric + "_cand_" + pair);
    }
  }
  for (const char* pair : kPairs) {
    for (const char* what : {"words", "bigrams", "trigrams", "entities"}) {
      add(std::string("overlap_") + what + "_cand_" + pair);
    }
  }
  for (const char* side : kSides) add(std::string("generic_") + side);
  for (const char* side : kSides) {
    for (const char* cat : {"wh", "intensifier", "confusion", "profanity", "negation"}) {
      add(std::string("has_") + cat + "_" + side);
    }
  }
  add("context_messages");
  add("article_sentences");
  for (const char* side : kSides) add(std::string("word_count_") + side);
  for (const char* side : kSides) {
    for (auto type : text::kAllMessageTypes) {
      add(std::string("type_") + std::string(text::to_string(type)) + "_" + side);
    }
  }
  for (const char* side : kSides) {
    for (auto s : {text::Sentiment::kNegative, text::Sentiment::kNeutral, text::Sentiment::kPositive}) {
      add(std::string("sentiment_") + std::string(text::to_string(s)) + "_" + side);
    }
  }
  return m;
}

double FeatureVector::at(std::string_view name) const {
  return values[static_cast<Eigen::Index>(manifest->entry(name).offset)];
}

FeatureExtractor::FeatureExtractor(std::shared_ptr<const text::TextResources> resources)
    : resources_(std::move(resources)),
      manifest_(std::make_shared<FeatureManifest>(feature_manifest(resources_->embeddings.dimension()))) {}

PreparedArticle FeatureExtractor::prepare(const Article& article) const {
  PreparedArticle p;
  p.words = text::words_only(text::tokenize(article.text));
  p.content_words = content_words(p.words, resources_->lexicons);
  p.entity_surfaces = entity_surfaces(article.text, resources_->tagger);
  p.embedding = text::avg_embedding(p.words, resources_->embeddings);
  p.sentence_count = article.sentences.size();
  return p;
}

FeatureVector FeatureExtractor::extract(const Article& article, std::span<const Message> context,
                                        std::string_view candidate) const {
  return extract(prepare(article), context, candidate);
}

FeatureVector FeatureExtractor::extract(const PreparedArticle& article, std::span<const Message> context,
                                        std::string_view candidate) const {
  if (trim(candidate).empty()) throw ValidationError("candidate text is empty");
  const auto& lex = resources_->lexicons;
  const auto& store = resources_->embeddings;

  MessageView cand{true, text::words_only(text::tokenize(candidate)), std::string(candidate)};
  MessageView user;
  std::vector<std::string> ctx_words;
  std::string ctx_raw;
  for (const auto& m : context) {
    auto w = text::words_only(text::tokenize(m.text));
    ctx_words.insert(ctx_words.end(), w.begin(), w.end());
    if (!ctx_raw.empty()) ctx_raw.push_back(' ');
    ctx_raw += m.text;
  }
  for (auto it = context.rbegin(); it != context.rend(); ++it) {
    if (it->speaker == Speaker::kHuman) {
      user = MessageView{true, text::words_only(text::tokenize(it->text)), it->text};
      break;
    }
  }

  FeatureVector fv;
  fv.manifest = manifest_;
  fv.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(manifest_->total()));
  Writer w(*manifest_, fv.values);

  const Eigen::VectorXd cand_emb = text::avg_embedding(cand.words, store);
  const Eigen::VectorXd ctx_emb = text::avg_embedding(ctx_words, store);
  w.set_block("emb_candidate", cand_emb);
  w.set_block("emb_context", ctx_emb);
  w.set_block("emb_article", article.embedding);

  w.set("sim_cosine_cand_ctx", text::cosine_sim(cand_emb, ctx_emb));
  w.set("sim_extrema_cand_ctx", text::extrema_sim(cand.words, ctx_words, store));
  w.set("sim_greedy_cand_ctx", text::greedy_match_sim(cand.words, ctx_words, store));
  w.set("sim_cosine_cand_art", text::cosine_sim(cand_emb, article.embedding));
  w.set("sim_extrema_cand_art", text::extrema_sim(cand.words, article.words, store));
  w.set("sim_greedy_cand_art", text::greedy_match_sim(cand.words, article.words, store));

  const auto cand_content = content_words(cand.words, lex);
  const auto ctx_content = content_words(ctx_words, lex);
  const auto cand_entities = entity_surfaces(cand.raw, resources_->tagger);
  const auto ctx_entities = entity_surfaces(ctx_raw, resources_->tagger);
  const std::set<std::string> cand_ent_set(cand_entities.begin(), cand_entities.end());
  struct Pair {
    const char* name;
    const std::vector<std::string>* content;
    std::set<std::string> entities;
  };
  const Pair pairs[] = {
      {"ctx", &ctx_content, {ctx_entities.begin(), ctx_entities.end()}},
      {"art", &article.content_words, {article.entity_surfaces.begin(), article.entity_surfaces.end()}},
  };
  for (const auto& p : pairs) {
    const std::string suffix = std::string("_cand_") + p.name;
    w.set("overlap_words" + suffix, overlap(ngram_set(cand_content, 1), ngram_set(*p.content, 1)));
    w.set("overlap_bigrams" + suffix, overlap(ngram_set(cand_content, 2), ngram_set(*p.content, 2)));
    w.set("overlap_trigrams" + suffix, overlap(ngram_set(cand_content, 3), ngram_set(*p.content, 3)));
    w.set("overlap_entities" + suffix, overlap(cand_ent_set, p.entities));
  }

  const MessageView* sides[] = {&cand, &user};
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& view = *sides[s];
    if (!view.present) continue;
    const std::string side = kSides[s];
    const auto& words = view.words;
    w.set("generic_" + side, text::is_generic(words, lex) ? 1.0 : 0.0);
    w.set("has_wh_" + side, text::has_wh_prefix_word(words) ? 1.0 : 0.0);
    w.set("has_intensifier_" + side, text::contains_any(words, lex.intensifiers) ? 1.0 : 0.0);
    w.set("has_confusion_" + side, text::contains_any(words, lex.confusion_words) ? 1.0 : 0.0);
    w.set("has_profanity_" + side, text::contains_any(words, lex.profanity) ? 1.0 : 0.0);
    w.set("has_negation_" + side, text::contains_any(words, lex.negations) ? 1.0 : 0.0);
    w.set("word_count_" + side, static_cast<double>(words.size()));
    const auto types = text::classify_message_types(view.raw, lex);
    for (auto type : types) w.set("type_" + std::string(text::to_string(type)) + "_" + side, 1.0);
    const auto sent = text::sentiment(view.raw, lex);
    w.set("sentiment_" + std::string(text::to_string(sent)) + "_" + side, 1.0);
  }
  w.set("context_messages", static_cast<double>(context.size()));
  w.set("article_sentences", static_cast<double>(article.sentence_count));
  return fv;
}

}  // namespace chorus::features
