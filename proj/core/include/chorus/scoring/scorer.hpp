#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chorus/features/extractor.hpp"
#include "chorus/model/types.hpp"
#include "chorus/scoring/checkpoint.hpp"
#include "chorus/scoring/network.hpp"

namespace chorus::scoring {

/// Article-side encodings reused across every candidate of a conversation.
struct EncodedArticle {
  features::PreparedArticle prepared;  // small architecture
  std::shared_ptr<const std::vector<TokenVectors>> sentences;  // deep architecture
};

/// Turns (article, context, candidate) into network inputs for one architecture.
class InputEncoder {
 public:
  InputEncoder(Architecture arch, std::shared_ptr<const features::FeatureExtractor> extractor);

  Architecture arch() const { return arch_; }
  const features::FeatureExtractor& extractor() const { return *extractor_; }

  EncodedArticle prepare(const Article& article) const;
  ScoringInput encode(const EncodedArticle& article, std::span<const Message> context,
                      std::string_view candidate) const;
  /// Lowercased word vectors of `text`, unknown tokens mapping to the zero vector.
  TokenVectors token_vectors(std::string_view text) const;

 private:
  Architecture arch_;
  std::shared_ptr<const features::FeatureExtractor> extractor_;
};

/// Assigns a score to a candidate reply in a conversation state. Thread-safe.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(const ConversationState& state, std::string_view candidate) const = 0;
  /// Scores every candidate; the default calls score() in turn.
  virtual std::vector<double> score_all(const ConversationState& state, std::span<const std::string> candidates) const;
  /// True when scores are probabilities in [0, 1].
  virtual bool probabilistic() const = 0;
};

/// Same score for every candidate.
class ConstantScorer : public Scorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  double score(const ConversationState&, std::string_view) const override { return value_; }
  bool probabilistic() const override { return value_ >= 0.0 && value_ <= 1.0; }

 private:
  double value_;
};

/// Scores with trained parameters: P(upvote) for reward networks, Q for Q networks.
class NetworkScorer : public Scorer {
 public:
  /// Throws ValidationError when the checkpoint's feature manifest differs from the extractor's.
  NetworkScorer(Checkpoint checkpoint, std::shared_ptr<const features::FeatureExtractor> extractor);

  double score(const ConversationState& state, std::string_view candidate) const override;
  std::vector<double> score_all(const ConversationState& state, std::span<const std::string> candidates) const override;
  bool probabilistic() const override { return checkpoint_.spec.objective == Objective::kReward; }

  const Checkpoint& checkpoint() const { return checkpoint_; }
  const Network& network() const { return *net_; }
  const InputEncoder& encoder() const { return encoder_; }

 private:
  std::shared_ptr<const EncodedArticle> article_for(const Article& article) const;

  Checkpoint checkpoint_;
  std::unique_ptr<Network> net_;
  InputEncoder encoder_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const EncodedArticle>> article_cache_;
};

/// Map raw network outputs to scores: sigmoid for reward networks, identity for Q networks.
double output_to_score(Objective objective, double output);

}  // namespace chorus::scoring
