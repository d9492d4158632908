#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chorus/scoring/config.hpp"

namespace chorus::scoring {

struct TrialRecord {
  int index = 0;
  TrainConfig config;
  std::optional<double> metric;  // absent when the trial failed
  std::string error;

  nlohmann::json to_json() const;
  static TrialRecord from_json(const nlohmann::json& j);
};

/// Uniform draw from every grid of `space`; other fields come from `base`.
/// The draw for a trial depends only on (seed, trial).
TrainConfig draw_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed, int trial);

/// Higher metric first, ties by trial index, failed trials last.
std::vector<TrialRecord> rank_trials(std::vector<TrialRecord> trials);

/// Random search. Each finished trial is appended to `log` as one JSON line;
/// trials already present in `log` are reused instead of re-run, so an
/// interrupted search resumes where it stopped. A throwing objective records
/// the error and the search continues. Returns the ranked table.
std::vector<TrialRecord> hyperparameter_search(const SearchSpace& space, const TrainConfig& base, int trials,
                                               std::uint64_t seed,
                                               const std::function<double(const TrainConfig&)>& objective,
                                               const std::filesystem::path& log = {});

}  // namespace chorus::scoring
