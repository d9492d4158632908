#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chorus/model/types.hpp"

namespace chorus::responders {

/// The ten news topic labels, in class-index order.
inline constexpr std::array<std::string_view, 10> kTopicLabels{
    "Society & Culture",      "Science & Mathematics", "Health",
    "Education & Reference",  "Computers & Internet",  "Sports",
    "Business & Finance",     "Entertainment & Music", "Family & Relationships",
    "Politics & Government",
};

/// Index into kTopicLabels; throws ValidationError for unknown labels.
std::size_t topic_index(std::string_view label);

struct TopicExample {
  std::size_t label = 0;
  std::string text;
};

struct TopicTrainConfig {
  int epochs = 25;
  double learning_rate = 0.5;
  std::uint64_t seed = 7;
};

struct TopicPrediction {
  std::size_t label = 0;
  double confidence = 0.0;
  std::array<double, 10> probabilities{};

  std::string_view label_name() const { return kTopicLabels[label]; }
};

/// Linear bag-of-n-grams classifier: softmax(B * A^T * x) where x is the
/// normalized bag of hashed unigram and bigram buckets.
class TopicModel {
 public:
  /// `bucket_bits` sets the hash table size to 2^bucket_bits rows of A.
  explicit TopicModel(int bucket_bits = 18, int hidden = 16);

  /// Hashed n-gram bucket ids (unigrams and bigrams) of a text.
  std::vector<std::uint32_t> ngram_ids(std::string_view text) const;

  /// Mini-batch-of-one SGD on the mean negative log-likelihood, with a
  /// linearly decaying learning rate. Returns the final epoch's mean loss.
  double train(std::span<const TopicExample> data, const TopicTrainConfig& cfg);

  /// Mean NLL over `data` under the current parameters.
  double loss(std::span<const TopicExample> data) const;

  /// Argmax label and its probability. Throws ValidationError for empty text.
  TopicPrediction classify(std::string_view text) const;
  TopicPrediction classify(const Article& article) const { return classify(article.text); }

  void save(const std::filesystem::path& path) const;
  static TopicModel load(const std::filesystem::path& path);

  int bucket_bits() const { return bucket_bits_; }
  int hidden() const { return hidden_; }
  Eigen::MatrixXf& input_matrix() { return input_; }
  Eigen::MatrixXf& output_matrix() { return output_; }

 private:
  Eigen::VectorXf hidden_of(std::span<const std::uint32_t> ids) const;

  int bucket_bits_;
  int hidden_;
  Eigen::MatrixXf input_;   // buckets x hidden
  Eigen::MatrixXf output_;  // classes x hidden
};

/// Reads "label<TAB>text" lines.
std::vector<TopicExample> load_topic_corpus(const std::filesystem::path& path);

}  // namespace chorus::responders
