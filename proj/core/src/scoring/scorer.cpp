#include "chorus/scoring/scorer.hpp"

#include "chorus/scoring/losses.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::scoring {
namespace {

constexpr std::size_t kArticleCacheLimit = 256;

}  // namespace

InputEncoder::InputEncoder(Architecture arch, std::shared_ptr<const features::FeatureExtractor> extractor)
    : arch_(arch), extractor_(std::move(extractor)) {
  if (!extractor_) throw ValidationError("input encoder needs a feature extractor");
}

TokenVectors InputEncoder::token_vectors(std::string_view text) const {
  const auto& store = extractor_->resources().embeddings;
  TokenVectors out;
  for (const auto& token : text::tokenize(text)) out.push_back(&store.lookup(text::to_lower(token)));
  return out;
}

EncodedArticle InputEncoder::prepare(const Article& article) const {
  EncodedArticle out;
  if (arch_ == Architecture::kSmall) {
    out.prepared = extractor_->prepare(article);
  } else {
    auto sentences = std::make_shared<std::vector<TokenVectors>>();
    for (const auto& s : article.sentences) sentences->push_back(token_vectors(s));
    if (sentences->empty()) sentences->push_back(token_vectors(article.text));
    out.sentences = std::move(sentences);
  }
  return out;
}

ScoringInput InputEncoder::encode(const EncodedArticle& article, std::span<const Message> context,
                                  std::string_view candidate) const {
  if (trim(candidate).empty()) throw ValidationError("candidate text is blank");
  ScoringInput in;
  if (arch_ == Architecture::kSmall) {
    in.features = extractor_->extract(article.prepared, context, candidate).values;
  } else {
    in.article = article.sentences;
    for (const auto& m : context) in.context.push_back(token_vectors(m.text));
    in.candidate = token_vectors(candidate);
  }
  return in;
}

std::vector<double> Scorer::score_all(const ConversationState& state, std::span<const std::string> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(score(state, c));
  return out;
}

double output_to_score(Objective objective, double output) {
  return objective == Objective::kReward ? sigmoid(output) : output;
}

NetworkScorer::NetworkScorer(Checkpoint checkpoint, std::shared_ptr<const features::FeatureExtractor> extractor)
    : checkpoint_(std::move(checkpoint)),
      net_(Network::create(checkpoint_.spec)),
      encoder_(checkpoint_.spec.arch, std::move(extractor)) {
  if (checkpoint_.theta.size() != net_->parameter_count()) {
    throw ValidationError("checkpoint parameters do not match its architecture");
  }
  if (checkpoint_.spec.arch == Architecture::kSmall) {
    if (!checkpoint_.manifest || !(*checkpoint_.manifest == encoder_.extractor().manifest())) {
      throw ValidationError("checkpoint feature manifest does not match the feature extractor");
    }
  } else if (checkpoint_.spec.input_dim != encoder_.extractor().resources().embeddings.dimension()) {
    throw ValidationError("checkpoint word-vector dimension does not match the embeddings");
  }
}

std::shared_ptr<const EncodedArticle> NetworkScorer::article_for(const Article& article) const {
  const std::string key = article.id + '\x1f' + article.text;
  {
    std::lock_guard lock(mu_);
    const auto it = article_cache_.find(key);
    if (it != article_cache_.end()) return it->second;
  }
  auto encoded = std::make_shared<const EncodedArticle>(encoder_.prepare(article));
  std::lock_guard lock(mu_);
  if (article_cache_.size() >= kArticleCacheLimit) article_cache_.clear();
  article_cache_.emplace(key, encoded);
  return encoded;
}

double NetworkScorer::score(const ConversationState& state, std::string_view candidate) const {
  const std::string text(candidate);
  return score_all(state, std::span<const std::string>(&text, 1)).front();
}

std::vector<double> NetworkScorer::score_all(const ConversationState& state,
                                             std::span<const std::string> candidates) const {
  if (candidates.empty()) return {};
  const auto article = article_for(state.article);
  std::vector<ScoringInput> inputs;
  inputs.reserve(candidates.size());
  for (const auto& c : candidates) inputs.push_back(encoder_.encode(*article, state.history, c));
  std::vector<const ScoringInput*> batch;
  for (const auto& in : inputs) batch.push_back(&in);
  const Eigen::VectorXd out = net_->forward(checkpoint_.theta, batch, ForwardOptions{}, nullptr);
  std::vector<double> scores;
  for (Eigen::Index i = 0; i < out.size(); ++i) scores.push_back(output_to_score(checkpoint_.spec.objective, out[i]));
  return scores;
}

}  // namespace chorus::scoring
