#pragma once

#include <Eigen/Core>

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::features {

struct LayoutEntry {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const LayoutEntry&) const = default;
};

/// Ordered description of every slot in a feature vector.
struct FeatureManifest {
  int embedding_dimension = 0;
  std::vector<LayoutEntry> layout;

  std::size_t total() const;
  const LayoutEntry& entry(std::string_view name) const;

  nlohmann::json to_json() const;
  static FeatureManifest from_json(const nlohmann::json& j);
  bool operator==(const FeatureManifest&) const = default;
};

/// The layout for a given embedding dimension: 3 * dimension + 48 values.
FeatureManifest feature_manifest(int embedding_dimension);

struct FeatureVector {
  Eigen::VectorXd values;
  std::shared_ptr<const FeatureManifest> manifest;

  double at(std::string_view name) const;
};

/// Article-side quantities that do not depend on the turn.
struct PreparedArticle {
  std::vector<std::string> words;
  std::vector<std::string> content_words;  // non-stop-words, order kept
  std::vector<std::string> entity_surfaces;  // lowercased, unique
  Eigen::VectorXd embedding;
  std::size_t sentence_count = 0;
};

/// Builds the hand-crafted (article, context, candidate) features for the small scorer.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(std::shared_ptr<const text::TextResources> resources);

  const FeatureManifest& manifest() const { return *manifest_; }
  std::shared_ptr<const FeatureManifest> manifest_ptr() const { return manifest_; }
  std::size_t dimension() const { return manifest_->total(); }

  PreparedArticle prepare(const Article& article) const;

  /// Throws ValidationError when the candidate is blank.
  FeatureVector extract(const Article& article, std::span<const Message> context,
                        std::string_view candidate) const;
  FeatureVector extract(const PreparedArticle& article, std::span<const Message> context,
                        std::string_view candidate) const;

  const text::TextResources& resources() const { return *resources_; }

 private:
  std::shared_ptr<const text::TextResources> resources_;
  std::shared_ptr<const FeatureManifest> manifest_;
};

}  // namespace chorus::features
