#include "chorus/scoring/search.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include "chorus/model/types.hpp"

namespace chorus::scoring {
namespace {

template <typename T>
const T& pick(const std::vector<T>& grid, std::mt19937_64& rng) {
  if (grid.empty()) throw ValidationError("search grid is empty");
  std::uniform_int_distribution<std::size_t> dist(0, grid.size() - 1);
  return grid[dist(rng)];
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

nlohmann::json TrialRecord::to_json() const {
  nlohmann::json j{{"trial", index}, {"config", config.to_json()}};
  j["metric"] = metric ? nlohmann::json(*metric) : nlohmann::json(nullptr);
  if (!error.empty()) j["error"] = error;
  return j;
}

TrialRecord TrialRecord::from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.index = j.at("trial").get<int>();
  r.config = TrainConfig::from_json(j.at("config"));
  if (!j.at("metric").is_null()) r.metric = j.at("metric").get<double>();
  r.error = j.value("error", std::string());
  return r;
}

TrainConfig draw_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed, int trial) {
  std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(trial)));
  TrainConfig c = base;
  c.optimizer = pick(space.optimizers, rng);
  c.learning_rate = pick(space.learning_rates, rng);
  c.activation = pick(space.activations, rng);
  c.init = pick(space.inits, rng);
  c.dropout = pick(space.dropouts, rng);
  return c;
}

std::vector<TrialRecord> rank_trials(std::vector<TrialRecord> trials) {
  std::stable_sort(trials.begin(), trials.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.metric.has_value() != b.metric.has_value()) return a.metric.has_value();
    if (a.metric && *a.metric != *b.metric) return *a.metric > *b.metric;
    return a.index < b.index;
  });
  return trials;
}

std::vector<TrialRecord> hyperparameter_search(const SearchSpace& space, const TrainConfig& base, int trials,
                                               std::uint64_t seed,
                                               const std::function<double(const TrainConfig&)>& objective,
                                               const std::filesystem::path& log) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  std::map<int, TrialRecord> done;
  if (!log.empty() && std::filesystem::exists(log)) {
    std::ifstream in(log);
    std::string line;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;  // partial last line of an interrupted run
      auto r = TrialRecord::from_json(j);
      done[r.index] = std::move(r);
    }
  }
  std::ofstream out;
  if (!log.empty()) {
    if (log.has_parent_path()) std::filesystem::create_directories(log.parent_path());
    out.open(log, std::ios::app);
  }
  std::vector<TrialRecord> all;
  for (int t = 0; t < trials; ++t) {
    if (const auto it = done.find(t); it != done.end()) {
      all.push_back(it->second);
      continue;
    }
    TrialRecord r;
    r.index = t;
    r.config = draw_config(space, base, seed, t);
    try {
      r.metric = objective(r.config);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    if (out.is_open()) out << r.to_json().dump() << '\n' << std::flush;
    all.push_back(std::move(r));
  }
  return rank_trials(std::move(all));
}

}  // namespace chorus::scoring
