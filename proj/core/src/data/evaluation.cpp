#include "chorus/data/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace chorus::data {
namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t turn) {
  std::uint64_t z = seed ^ (rep * 0x9e3779b97f4a7c15ULL) ^ ((turn + 1) * 0xd1b54a32d192ed03ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * v << "%";
  return s.str();
}

}  // namespace

std::vector<TurnGroup> group_turns(std::span<const TransitionTuple> records, std::vector<std::string>* warnings) {
  std::vector<TurnGroup> groups;
  std::map<std::pair<std::string, std::uint32_t>, std::size_t> index;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.conversation_id, r.turn_index);
    auto it = index.find(key);
    if (it == index.end()) {
      TurnGroup g;
      g.conversation_id = r.conversation_id;
      g.turn_index = r.turn_index;
      g.state = r.state;
      it = index.emplace(key, groups.size()).first;
      groups.push_back(std::move(g));
    }
    auto& g = groups[it->second];
    if (r.vote == 1) g.voted = g.candidates.size();
    g.candidates.push_back(r.action);
  }
  std::vector<TurnGroup> out;
  for (auto& g : groups) {
    if (!g.voted) {
      if (warnings) {
        warnings->push_back("turn " + std::to_string(g.turn_index) + " of '" + g.conversation_id +
                            "' has no voted candidate; excluded");
      }
      continue;
    }
    out.push_back(std::move(g));
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json by_context = nlohmann::json::object();
  for (const auto& [len, v] : r1_by_context) by_context[std::to_string(len)] = {{"r1", v.first}, {"turns", v.second}};
  return {{"policy", policy},
          {"turns", turns},
          {"excluded", excluded},
          {"repetitions", repetitions},
          {"recall", recall},
          {"recall_stddev", recall_stddev},
          {"average_recall", average_recall},
          {"r1_by_context_length", by_context}};
}

std::string EvalReport::table() const {
  std::ostringstream s;
  s << "policy " << policy << " (" << turns << " turns, " << repetitions << " repetitions)\n";
  for (std::size_t k = 1; k <= recall.size(); ++k) {
    s << "  R@" << k << "  " << percent(recall[k - 1]);
    if (repetitions > 1) s << "  +/- " << percent(recall_stddev[k - 1]);
    s << '\n';
  }
  s << "  average R@k  " << percent(average_recall) << '\n';
  s << "  R@1 by context length:";
  for (const auto& [len, v] : r1_by_context) s << ' ' << len << ':' << percent(v.first) << " (" << v.second << ')';
  s << '\n';
  return s.str();
}

EvalReport evaluate(std::span<const TurnGroup> turns, const scoring::Scorer& scorer,
                    const selection::Selector& selector, selection::PolicyKind policy, const EvalOptions& options) {
  if (turns.empty()) throw ValidationError("evaluation needs at least one turn");
  if (options.repetitions < 1) throw ValidationError("repetitions must be at least 1");
  std::size_t max_k = options.max_k;
  if (max_k == 0) {
    for (const auto& t : turns) max_k = std::max(max_k, t.candidates.size());
  }
  const int reps = policy == selection::PolicyKind::kArgmax ? 1 : options.repetitions;

  // rank[t][r]: 0-based position of the voted candidate in repetition r
  std::vector<std::vector<std::size_t>> rank(turns.size(), std::vector<std::size_t>(static_cast<std::size_t>(reps)));
  parallel_for(turns.size(), options.threads, [&](std::size_t i) {
    const auto& turn = turns[i];
    if (!turn.voted) throw ValidationError("turn without a voted candidate");
    std::vector<std::string> texts;
    for (const auto& c : turn.candidates) texts.push_back(c.text);
    const auto scores = scorer.score_all(turn.state, texts);
    std::vector<Candidate> scored = turn.candidates;
    for (std::size_t c = 0; c < scored.size(); ++c) scored[c].score = scores[c];
    for (int r = 0; r < reps; ++r) {
      std::mt19937_64 rng(stream_seed(options.seed, static_cast<std::uint64_t>(r), i));
      const auto order = selector.select(turn.state, scored, rng, policy).order;
      rank[i][static_cast<std::size_t>(r)] =
          static_cast<std::size_t>(std::find(order.begin(), order.end(), *turn.voted) - order.begin());
    }
  });

  EvalReport report;
  report.policy = std::string(selection::to_string(policy));
  report.turns = turns.size();
  report.repetitions = reps;
  report.recall.assign(max_k, 0.0);
  report.recall_stddev.assign(max_k, 0.0);
  const double n = static_cast<double>(turns.size());
  for (std::size_t k = 1; k <= max_k; ++k) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      std::size_t hits = 0;
      for (const auto& ranks : rank) hits += ranks[static_cast<std::size_t>(r)] < k;
      const double recall = static_cast<double>(hits) / n;
      sum += recall;
      sum_sq += recall * recall;
    }
    const double mean = sum / reps;
    report.recall[k - 1] = mean;
    report.recall_stddev[k - 1] = std::sqrt(std::max(0.0, sum_sq / reps - mean * mean));
  }
  double total = 0.0;
  for (double r : report.recall) total += r;
  report.average_recall = max_k ? total / static_cast<double>(max_k) : 0.0;

  std::map<std::size_t, std::pair<double, std::size_t>> by_context;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    double hit = 0.0;
    for (std::size_t pos : rank[i]) hit += pos == 0;
    auto& slot = by_context[turns[i].context_length()];
    slot.first += hit / reps;
    ++slot.second;
  }
  for (auto& [len, v] : by_context) v.first /= static_cast<double>(v.second);
  report.r1_by_context = std::move(by_context);
  return report;
}

double recall_at_k(std::span<const TurnGroup> turns, const scoring::Scorer& scorer,
                   const selection::Selector& selector, selection::PolicyKind policy, std::size_t k,
                   const EvalOptions& options) {
  if (k < 1) throw ValidationError("k must be at least 1");
  EvalOptions opt = options;
  opt.max_k = std::max(k, options.max_k);
  return evaluate(turns, scorer, selector, policy, opt).at(k);
}

std::string recall_csv(std::span<const EvalReport> reports) {
  std::ostringstream s;
  s << "policy,k,recall,stddev\n";
  s << std::setprecision(10);
  for (const auto& r : reports) {
    for (std::size_t k = 1; k <= r.recall.size(); ++k) {
      s << r.policy << ',' << k << ',' << r.recall[k - 1] << ',' << r.recall_stddev[k - 1] << '\n';
    }
  }
  return s.str();
}

void write_reports(const std::filesystem::path& prefix, std::span<const EvalReport> reports) {
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  nlohmann::json all = nlohmann::json::array();
  std::string text;
  for (const auto& r : reports) {
    all.push_back(r.to_json());
    text += r.table();
  }
  auto write = [&](const std::string& ext, const std::string& body) {
    std::ofstream out(prefix.string() + ext);
    if (!out) throw ValidationError("cannot write " + prefix.string() + ext);
    out << body;
  };
  write(".json", all.dump(2) + "\n");
  write(".csv", recall_csv(reports));
  write(".txt", text);
}

nlohmann::json CorpusStats::to_json() const {
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [kind, s] : models) {
    m[std::string(to_string(kind))] = {{"available", s.available},
                                       {"selected", s.selected},
                                       {"availability", s.availability},
                                       {"selection_given_available", s.selection_given_available}};
  }
  return {{"records", records},
          {"positives", positives},
          {"conversations", conversations},
          {"interactions", interactions},
          {"avg_interactions", avg_interactions},
          {"context_lengths", hist(context_lengths)},
          {"candidate_counts", hist(candidate_counts)},
          {"models", m}};
}

std::string CorpusStats::table() const {
  std::ostringstream s;
  s << "records " << records << " (" << positives << " positive)\n"
    << "conversations " << conversations << ", interactions " << interactions << ", per conversation "
    << std::fixed << std::setprecision(2) << avg_interactions << '\n';
  s << "candidates per turn:";
  for (const auto& [k, v] : candidate_counts) s << ' ' << k << ':' << v;
  s << "\ncontext length:";
  for (const auto& [k, v] : context_lengths) s << ' ' << k << ':' << v;
  s << "\nmodel            available   selected|available\n";
  for (const auto& [kind, m] : models) {
    s << std::left << std::setw(17) << to_string(kind) << std::setw(12) << percent(m.availability)
      << percent(m.selection_given_available) << '\n';
  }
  return s.str();
}

CorpusStats corpus_stats(std::span<const TransitionTuple> records) {
  CorpusStats st;
  st.records = records.size();
  std::set<std::string> conversations;
  for (const auto& r : records) {
    st.positives += r.vote == 1;
    conversations.insert(r.conversation_id);
  }
  st.conversations = conversations.size();
  const auto groups = group_turns(records);
  st.interactions = groups.size();
  st.avg_interactions = st.conversations ? static_cast<double>(st.interactions) / static_cast<double>(st.conversations) : 0.0;
  for (ResponderKind k : kAllResponders) st.models[k] = ModelStats{};
  for (const auto& g : groups) {
    ++st.context_lengths[g.context_length()];
    ++st.candidate_counts[g.candidates.size()];
    std::set<ResponderKind> present;
    for (const auto& c : g.candidates) present.insert(c.model);
    for (ResponderKind k : present) ++st.models[k].available;
    ++st.models[g.candidates[*g.voted].model].selected;
  }
  for (auto& [kind, m] : st.models) {
    m.availability = st.interactions ? static_cast<double>(m.available) / static_cast<double>(st.interactions) : 0.0;
    m.selection_given_available = m.available ? static_cast<double>(m.selected) / static_cast<double>(m.available) : 0.0;
  }
  return st;
}

}  // namespace chorus::data
