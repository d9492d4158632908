#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/orchestrator/engine.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/scoring/training.hpp"

namespace chorus::data {

/// Dataset files: one JSON object per line. The first line is
///   {"format": "chorus-transitions", "version": 1}
/// followed by, per conversation, a header line
///   {"kind": "conversation", "conversation_id": s, "article": {"id", "text", "sentences"}, "final_rating": n|null}
/// and its records
///   {"kind": "transition", "conversation_id": s, "turn_index": n, "context": [message...], "bored_counter": n,
///    "action": candidate, "reward": x, "vote": 0|1, "final_rating": n|null,
///    "next_context": [message...]|null, "next_bored_counter": n, "next_candidates": [candidate...]}
/// where message = {"speaker": "human"|"bot", "text": s, "turn_index": n} and
/// candidate = {"model": s, "text": s, "score": x}.
inline constexpr std::string_view kDatasetFormat = "chorus-transitions";
inline constexpr int kDatasetVersion = 1;

nlohmann::json candidate_to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);
nlohmann::json message_to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);
nlohmann::json article_to_json(const Article& a);
Article article_from_json(const nlohmann::json& j);

void write_dataset(std::ostream& out, std::span<const TransitionTuple> records);
void write_dataset(const std::filesystem::path& path, std::span<const TransitionTuple> records);
/// Appends records to an existing dataset file, or creates it with a header.
void append_dataset(const std::filesystem::path& path, std::span<const TransitionTuple> records);
/// Throws ValidationError on a missing or unknown header, an unsupported
/// version, malformed lines or records of an undeclared conversation.
std::vector<TransitionTuple> read_dataset(std::istream& in);
std::vector<TransitionTuple> read_dataset(const std::filesystem::path& path);

/// One record per (committed turn, candidate): the chosen candidate has vote 1,
/// the rest 0, rewards follow shape_reward. A turn's next state is the history
/// before the following committed turn's reply, and its next candidates are
/// that turn's candidates; the last committed turn is terminal. Uncommitted
/// turns are dropped. An unrated conversation yields nothing and a warning.
std::vector<TransitionTuple> export_transitions(const orchestrator::ConversationLog& log,
                                                std::optional<int> final_rating,
                                                std::vector<std::string>* warnings = nullptr);

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;

  void validate() const;
};

struct DatasetSplit {
  std::vector<TransitionTuple> train;
  std::vector<TransitionTuple> valid;
  std::vector<TransitionTuple> test;
  std::map<std::string, std::string> manifest;  // article id -> "train" | "valid" | "test"

  nlohmann::json manifest_json() const;
};

/// Shuffles the distinct article ids with `seed` and partitions them by the
/// fractions (rounded, each split keeping at least one article); every record
/// follows its article. Throws ValidationError with fewer than 3 articles.
DatasetSplit split_by_article(std::span<const TransitionTuple> records, const SplitFractions& fractions,
                              std::uint64_t seed);

/// Replicates positive (vote 1) records until they match the negatives: each
/// positive floor(N/P) times plus a seeded sample without replacement for the
/// remainder. Negatives are kept as they are and the result is shuffled.
/// Input with at least as many positives as negatives is returned unchanged.
/// Throws ValidationError when a class is absent.
std::vector<TransitionTuple> oversample_positives(std::span<const TransitionTuple> records, std::uint64_t seed);

/// Encodes records for the reward classifier (label = vote).
std::vector<scoring::LabeledSample> labeled_samples(std::span<const TransitionTuple> records,
                                                    const scoring::InputEncoder& encoder);
/// Encodes records for fitted Q-iteration.
std::vector<scoring::QSample> q_samples(std::span<const TransitionTuple> records, const scoring::InputEncoder& encoder);

}  // namespace chorus::data
