#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chorus::text {

/// Read-only word-vector table. Unknown tokens map to the zero vector.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(int dimension = 300);

  /// Parses the word2vec text format ("token f1 ... fd" per line). A first line
  /// with exactly two fields ("count dim") is treated as a header and skipped.
  /// Keys are lowercased; the first occurrence of a key wins.
  static EmbeddingStore load(const std::filesystem::path& path);
  static EmbeddingStore parse(std::istream& in);

  /// Deterministic stand-in vectors for `vocabulary`. Each word gets a unit
  /// vector mixing a word-specific random direction with one shared by words
  /// of the same four-letter prefix, so inflections land close together.
  static EmbeddingStore synthetic(std::span<const std::string> vocabulary, int dimension, std::uint64_t seed);

  /// Writes the word2vec text format with a "count dim" header, keys sorted.
  void save(const std::filesystem::path& path) const;

  void insert(std::string token, Eigen::VectorXd vec);

  int dimension() const { return dimension_; }
  std::size_t size() const { return table_.size(); }
  bool contains(std::string_view token) const;
  /// nullptr when the token is unknown.
  const Eigen::VectorXd* find(std::string_view token) const;
  /// Zero vector when the token is unknown.
  const Eigen::VectorXd& lookup(std::string_view token) const;

 private:
  int dimension_;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
  Eigen::VectorXd zero_;
};

/// Sorted distinct lowercase word tokens of every .txt/.tsv file under `dir`.
std::vector<std::string> collect_vocabulary(const std::filesystem::path& dir);

/// Mean of the known tokens' vectors; zero vector when none is known.
Eigen::VectorXd avg_embedding(std::span<const std::string> tokens, const EmbeddingStore& store);

/// u.v / (|u||v|); 0 when either norm is 0. Throws std::invalid_argument on size mismatch.
double cosine_sim(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Per-dimension signed max-magnitude pooling of each side, then cosine.
double extrema_sim(std::span<const std::string> a, std::span<const std::string> b,
                   const EmbeddingStore& store);

/// Mean best-match cosine from a to b, averaged with the b-to-a direction.
double greedy_match_sim(std::span<const std::string> a, std::span<const std::string> b,
                        const EmbeddingStore& store);

}  // namespace chorus::text
