#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/model/types.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/selection/selector.hpp"

namespace chorus::data {

/// All candidates offered at one bot turn.
struct TurnGroup {
  std::string conversation_id;
  std::uint32_t turn_index = 0;
  ConversationState state;
  std::vector<Candidate> candidates;
  std::optional<std::size_t> voted;  // index of the vote=1 candidate

  /// Messages in the context preceding the reply.
  std::size_t context_length() const { return state.history.size(); }
};

/// Groups records by (conversation, turn) in first-seen order. Turns without a
/// vote=1 candidate are dropped, with a warning when `warnings` is given.
std::vector<TurnGroup> group_turns(std::span<const TransitionTuple> records,
                                   std::vector<std::string>* warnings = nullptr);

struct EvalOptions {
  /// Largest k reported; 0 means the largest candidate count seen.
  std::size_t max_k = 0;
  /// Repetitions averaged for policies that draw at random (rule-based, sampled).
  int repetitions = 32;
  std::uint64_t seed = 0;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct EvalReport {
  std::string policy;
  std::size_t turns = 0;
  std::size_t excluded = 0;  // turns without a voted candidate
  int repetitions = 1;
  std::vector<double> recall;  // recall[k - 1] = R@k
  std::vector<double> recall_stddev;  // across repetitions
  double average_recall = 0.0;  // mean of R@1..R@max_k
  /// context length -> (R@1, turns)
  std::map<std::size_t, std::pair<double, std::size_t>> r1_by_context;

  double at(std::size_t k) const { return recall.at(k - 1); }
  nlohmann::json to_json() const;
  /// Human-readable summary table.
  std::string table() const;
};

/// Re-scores every turn's candidates with `scorer`, ranks them with `policy`
/// and reports the fraction of turns whose voted candidate is in the top k.
/// A turn with fewer than k candidates counts as a hit. Deterministic for a
/// seed whatever the thread count.
EvalReport evaluate(std::span<const TurnGroup> turns, const scoring::Scorer& scorer,
                    const selection::Selector& selector, selection::PolicyKind policy, const EvalOptions& options = {});

/// R@k of evaluate() for a single k.
double recall_at_k(std::span<const TurnGroup> turns, const scoring::Scorer& scorer,
                   const selection::Selector& selector, selection::PolicyKind policy, std::size_t k,
                   const EvalOptions& options = {});

/// Plot-ready rows "policy,k,recall,stddev".
std::string recall_csv(std::span<const EvalReport> reports);

/// Writes `<prefix>.json`, `<prefix>.csv` and `<prefix>.txt`.
void write_reports(const std::filesystem::path& prefix, std::span<const EvalReport> reports);

struct ModelStats {
  std::size_t available = 0;  // turns where the model offered a candidate
  std::size_t selected = 0;  // turns where its candidate was the voted one
  double availability = 0.0;  // available / turns
  double selection_given_available = 0.0;  // selected / available
};

struct CorpusStats {
  std::size_t records = 0;
  std::size_t positives = 0;
  std::size_t conversations = 0;
  std::size_t interactions = 0;  // turns with a voted candidate
  double avg_interactions = 0.0;  // per conversation
  std::map<std::size_t, std::size_t> context_lengths;  // length -> turns
  std::map<std::size_t, std::size_t> candidate_counts;  // count -> turns
  std::map<ResponderKind, ModelStats> models;

  nlohmann::json to_json() const;
  std::string table() const;
};

CorpusStats corpus_stats(std::span<const TransitionTuple> records);

}  // namespace chorus::data
