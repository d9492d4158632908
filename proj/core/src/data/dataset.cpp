#include "chorus/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace chorus::data {
namespace {

using nlohmann::json;

json messages_to_json(const std::vector<Message>& history) {
  json out = json::array();
  for (const auto& m : history) out.push_back(message_to_json(m));
  return out;
}

std::vector<Message> messages_from_json(const json& j) {
  std::vector<Message> out;
  for (const auto& m : j) out.push_back(message_from_json(m));
  return out;
}

json candidates_to_json(const std::vector<Candidate>& cs) {
  json out = json::array();
  for (const auto& c : cs) out.push_back(candidate_to_json(c));
  return out;
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> optional_int(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

/// History entries spoken before `turn_index`.
std::vector<Message> history_before(const std::vector<Message>& history, std::uint32_t turn_index) {
  std::vector<Message> out;
  for (const auto& m : history) {
    if (m.turn_index < turn_index) out.push_back(m);
  }
  return out;
}

/// Caches article preparation, which dominates encoding cost.
class ArticleCache {
 public:
  explicit ArticleCache(const scoring::InputEncoder& encoder) : encoder_(encoder) {}
  const scoring::EncodedArticle& get(const Article& a) {
    auto it = cache_.find(a.id);
    if (it == cache_.end()) it = cache_.emplace(a.id, encoder_.prepare(a)).first;
    return it->second;
  }

 private:
  const scoring::InputEncoder& encoder_;
  std::map<std::string, scoring::EncodedArticle> cache_;
};

}  // namespace

json candidate_to_json(const Candidate& c) {
  return {{"model", to_string(c.model)}, {"text", c.text}, {"score", c.score}};
}

Candidate candidate_from_json(const json& j) {
  return Candidate{responder_from_string(j.at("model").get<std::string>()), j.at("text").get<std::string>(),
                   j.value("score", 0.0)};
}

json message_to_json(const Message& m) {
  return {{"speaker", to_string(m.speaker)}, {"text", m.text}, {"turn_index", m.turn_index}};
}

Message message_from_json(const json& j) {
  return Message{speaker_from_string(j.at("speaker").get<std::string>()), j.at("text").get<std::string>(),
                 j.at("turn_index").get<std::uint32_t>()};
}

json article_to_json(const Article& a) { return {{"id", a.id}, {"text", a.text}, {"sentences", a.sentences}}; }

Article article_from_json(const json& j) {
  Article a = Article::from_text(j.at("id").get<std::string>(), j.at("text").get<std::string>());
  if (j.contains("sentences")) a.sentences = j.at("sentences").get<std::vector<std::string>>();
  return a;
}

namespace {

void write_records(std::ostream& out, std::span<const TransitionTuple> records) {
  std::string current;
  bool first = true;
  for (const auto& r : records) {
    if (first || r.conversation_id != current) {
      current = r.conversation_id;
      first = false;
      out << json{{"kind", "conversation"},
                  {"conversation_id", r.conversation_id},
                  {"article", article_to_json(r.state.article)},
                  {"final_rating", optional_int(r.final_rating)}}
                 .dump()
          << '\n';
    }
    json j{{"kind", "transition"},
           {"conversation_id", r.conversation_id},
           {"turn_index", r.turn_index},
           {"context", messages_to_json(r.state.history)},
           {"bored_counter", r.state.bored_counter},
           {"action", candidate_to_json(r.action)},
           {"reward", r.reward},
           {"vote", r.vote},
           {"final_rating", optional_int(r.final_rating)},
           {"next_candidates", candidates_to_json(r.next_candidates)}};
    if (r.next_state) {
      j["next_context"] = messages_to_json(r.next_state->history);
      j["next_bored_counter"] = r.next_state->bored_counter;
    } else {
      j["next_context"] = nullptr;
      j["next_bored_counter"] = 0;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace

void write_dataset(std::ostream& out, std::span<const TransitionTuple> records) {
  out << json{{"format", kDatasetFormat}, {"version", kDatasetVersion}}.dump() << '\n';
  write_records(out, records);
}

void append_dataset(const std::filesystem::path& path, std::span<const TransitionTuple> records) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0) {
    write_dataset(path, records);
    return;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw ValidationError("cannot append to dataset " + path.string());
  write_records(out, records);
}

void write_dataset(const std::filesystem::path& path, std::span<const TransitionTuple> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write dataset " + path.string());
  write_dataset(out, records);
}

std::vector<TransitionTuple> read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset is empty");
  const auto header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != kDatasetFormat) {
    throw ValidationError("not a transitions dataset");
  }
  if (header.value("version", 0) != kDatasetVersion) {
    throw ValidationError("unsupported dataset version " + header.value("version", json()).dump());
  }
  std::map<std::string, Article> articles;
  std::vector<TransitionTuple> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ValidationError("malformed dataset line " + std::to_string(line_no));
    }
    try {
      const auto kind = j.at("kind").get<std::string>();
      const auto id = j.at("conversation_id").get<std::string>();
      if (kind == "conversation") {
        articles[id] = article_from_json(j.at("article"));
        continue;
      }
      if (kind != "transition") throw ValidationError("unknown record kind '" + kind + "'");
      const auto art = articles.find(id);
      if (art == articles.end()) throw ValidationError("record for undeclared conversation '" + id + "'");
      TransitionTuple t;
      t.conversation_id = id;
      t.turn_index = j.at("turn_index").get<std::uint32_t>();
      t.state.conversation_id = id;
      t.state.article = art->second;
      t.state.history = messages_from_json(j.at("context"));
      t.state.bored_counter = j.value("bored_counter", 0u);
      t.action = candidate_from_json(j.at("action"));
      t.reward = j.at("reward").get<double>();
      t.vote = j.at("vote").get<int>();
      t.final_rating = optional_int(j.at("final_rating"));
      if (!j.at("next_context").is_null()) {
        ConversationState next;
        next.conversation_id = id;
        next.article = art->second;
        next.history = messages_from_json(j.at("next_context"));
        next.bored_counter = j.value("next_bored_counter", 0u);
        t.next_state = std::move(next);
      }
      for (const auto& c : j.at("next_candidates")) t.next_candidates.push_back(candidate_from_json(c));
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TransitionTuple> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read dataset " + path.string());
  return read_dataset(in);
}

std::vector<TransitionTuple> export_transitions(const orchestrator::ConversationLog& log,
                                                std::optional<int> final_rating,
                                                std::vector<std::string>* warnings) {
  if (!final_rating) {
    if (warnings) warnings->push_back("conversation '" + log.conversation_id + "' has no rating; skipped");
    return {};
  }
  shape_reward(0, *final_rating);  // validates the rating
  std::vector<const orchestrator::TurnRecord*> turns;
  for (const auto& t : log.turns) {
    if (t.chosen && !t.candidates.empty()) turns.push_back(&t);
  }
  auto state_before = [&](std::uint32_t turn_index) {
    ConversationState s;
    s.conversation_id = log.conversation_id;
    s.article = log.article;
    s.history = history_before(log.history, turn_index);
    return s;
  };
  std::vector<TransitionTuple> out;
  for (std::size_t t = 0; t < turns.size(); ++t) {
    const auto& turn = *turns[t];
    const ConversationState state = state_before(turn.turn_index);
    std::optional<ConversationState> next;
    std::vector<Candidate> next_candidates;
    if (t + 1 < turns.size()) {
      next = state_before(turns[t + 1]->turn_index);
      next_candidates = turns[t + 1]->candidates;
    }
    for (std::size_t i = 0; i < turn.candidates.size(); ++i) {
      TransitionTuple r;
      r.conversation_id = log.conversation_id;
      r.turn_index = turn.turn_index;
      r.state = state;
      r.action = turn.candidates[i];
      r.vote = (i == *turn.chosen) ? 1 : 0;
      r.final_rating = final_rating;
      r.reward = shape_reward(r.vote, *final_rating);
      r.next_state = next;
      r.next_candidates = next_candidates;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void SplitFractions::validate() const {
  if (train < 0 || valid < 0 || test < 0) throw ValidationError("split fractions must be non-negative");
  if (std::abs(train + valid + test - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
}

json DatasetSplit::manifest_json() const {
  json j = json::object();
  for (const auto& [article, split] : manifest) j[article] = split;
  return j;
}

DatasetSplit split_by_article(std::span<const TransitionTuple> records, const SplitFractions& fractions,
                              std::uint64_t seed) {
  fractions.validate();
  std::vector<std::string> ids;
  {
    std::set<std::string> seen;
    for (const auto& r : records) {
      if (seen.insert(r.state.article.id).second) ids.push_back(r.state.article.id);
    }
  }
  if (ids.size() < 3) throw ValidationError("splitting needs at least 3 articles, got " + std::to_string(ids.size()));
  std::sort(ids.begin(), ids.end());  // independent of record order
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto n = static_cast<double>(ids.size());
  auto n_valid = static_cast<std::size_t>(std::llround(fractions.valid * n));
  auto n_test = static_cast<std::size_t>(std::llround(fractions.test * n));
  if (fractions.valid > 0) n_valid = std::max<std::size_t>(n_valid, 1);
  if (fractions.test > 0) n_test = std::max<std::size_t>(n_test, 1);
  while (n_valid + n_test >= ids.size()) {  // keep at least one training article
    if (n_valid >= n_test && n_valid > 0) {
      --n_valid;
    } else {
      --n_test;
    }
  }
  DatasetSplit split;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const char* name = i < n_valid ? "valid" : (i < n_valid + n_test ? "test" : "train");
    split.manifest[ids[i]] = name;
  }
  for (const auto& r : records) {
    const auto& name = split.manifest.at(r.state.article.id);
    if (name == "train") {
      split.train.push_back(r);
    } else if (name == "valid") {
      split.valid.push_back(r);
    } else {
      split.test.push_back(r);
    }
  }
  return split;
}

std::vector<TransitionTuple> oversample_positives(std::span<const TransitionTuple> records, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < records.size(); ++i) (records[i].vote == 1 ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw ValidationError("oversampling needs both positive and negative records");
  if (pos.size() >= neg.size()) return {records.begin(), records.end()};

  std::mt19937_64 rng(seed);
  const std::size_t copies = neg.size() / pos.size();
  const std::size_t remainder = neg.size() - copies * pos.size();
  std::vector<std::size_t> extra(pos);
  std::shuffle(extra.begin(), extra.end(), rng);
  extra.resize(remainder);

  std::vector<std::size_t> order(neg);
  for (std::size_t c = 0; c < copies; ++c) order.insert(order.end(), pos.begin(), pos.end());
  order.insert(order.end(), extra.begin(), extra.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<TransitionTuple> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(records[i]);
  return out;
}

std::vector<scoring::LabeledSample> labeled_samples(std::span<const TransitionTuple> records,
                                                    const scoring::InputEncoder& encoder) {
  ArticleCache cache(encoder);
  std::vector<scoring::LabeledSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back({encoder.encode(cache.get(r.state.article), r.state.history, r.action.text),
                   static_cast<double>(r.vote)});
  }
  return out;
}

std::vector<scoring::QSample> q_samples(std::span<const TransitionTuple> records, const scoring::InputEncoder& encoder) {
  ArticleCache cache(encoder);
  std::vector<scoring::QSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& art = cache.get(r.state.article);
    scoring::QSample s;
    s.input = encoder.encode(art, r.state.history, r.action.text);
    s.reward = r.reward;
    s.terminal = is_terminal(r);
    if (!s.terminal) {
      const auto& next_history = r.next_state ? r.next_state->history : r.state.history;
      for (const auto& c : r.next_candidates) s.next.push_back(encoder.encode(art, next_history, c.text));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace chorus::data
