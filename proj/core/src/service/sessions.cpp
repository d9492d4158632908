#include "chorus/service/sessions.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "chorus/data/dataset.hpp"

namespace chorus::service {

using nlohmann::json;

ArticleCorpus::ArticleCorpus(std::vector<Article> articles) : articles_(std::move(articles)) {
  std::set<std::string> ids;
  for (const auto& a : articles_) {
    if (!ids.insert(a.id).second) throw ValidationError("duplicate article id '" + a.id + "'");
  }
}

ArticleCorpus ArticleCorpus::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("article directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Article> articles;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text(trim(buf.str()));
    if (text.empty()) continue;
    articles.push_back(Article::from_text(f.stem().string(), text));
  }
  return ArticleCorpus(std::move(articles));
}

const Article& ArticleCorpus::get(const std::string& id) const {
  for (const auto& a : articles_) {
    if (a.id == id) return a;
  }
  throw NotFoundError("unknown article '" + id + "'");
}

std::string_view to_string(SessionMode mode) { return mode == SessionMode::kLive ? "live" : "collect"; }

SessionMode session_mode_from_string(std::string_view name) {
  if (name == "live") return SessionMode::kLive;
  if (name == "collect") return SessionMode::kCollect;
  throw ValidationError("mode must be 'live' or 'collect'");
}

struct SessionManager::Session {
  std::string id;
  SessionMode mode = SessionMode::kLive;
  std::string article_id;
  bool finished = false;
  int interactions = 0;
  std::optional<int> rating;
  std::vector<Message> final_history;  // kept once the engine forgets the conversation
  std::mt19937_64 rng;

  // Offered candidates: public id -> engine index, in display order.
  std::vector<std::pair<std::string, std::size_t>> offered;
  json offered_json = json::array();
  std::set<std::string> retired_ids;

  std::mutex mu;  // serializes operations

  mutable std::mutex events_mu;
  mutable std::condition_variable events_cv;
  std::vector<SessionEvent> events;
};

SessionManager::SessionManager(std::shared_ptr<orchestrator::Engine> engine, ArticleCorpus corpus,
                               SessionOptions options)
    : engine_(std::move(engine)), corpus_(std::move(corpus)), options_(std::move(options)), rng_(options_.seed) {
  if (!engine_) throw ValidationError("session manager needs an engine");
  if (options_.min_interactions < 0) throw ValidationError("min_interactions must be non-negative");
}

std::string SessionManager::random_id(std::string_view prefix) {
  static thread_local std::random_device device;
  std::ostringstream s;
  s << prefix << std::hex << std::setfill('0');
  for (int i = 0; i < 4; ++i) s << std::setw(8) << device();
  return s.str();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

void SessionManager::push_event(Session& s, std::string type, json data) const {
  {
    std::lock_guard lock(s.events_mu);
    SessionEvent e;
    e.seq = s.events.size() + 1;
    e.type = std::move(type);
    e.data = std::move(data);
    s.events.push_back(std::move(e));
  }
  s.events_cv.notify_all();
}

json SessionManager::present(Session& s, const orchestrator::TurnRecord& turn) {
  std::vector<std::size_t> order(turn.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), s.rng);
  s.offered.clear();
  s.offered_json = json::array();
  for (std::size_t index : order) {
    std::string cid = random_id("c-");
    const auto& c = turn.candidates[index];
    json item{{"id", cid}, {"text", c.text}};
    if (options_.reveal_models) {
      item["model"] = std::string(to_string(c.model));
      item["score"] = c.score;
    }
    s.offered_json.push_back(std::move(item));
    s.offered.emplace_back(std::move(cid), index);
  }
  return s.offered_json;
}

json SessionManager::view(const Session& s) const {
  const auto history = s.finished ? s.final_history : engine_->snapshot(s.id).history;
  json messages = json::array();
  for (const auto& m : history) {
    messages.push_back({{"speaker", std::string(to_string(m.speaker))}, {"text", m.text}, {"turn_index", m.turn_index}});
  }
  json j{{"session_id", s.id},
         {"mode", std::string(to_string(s.mode))},
         {"status", s.finished ? "finished" : "active"},
         {"article_id", s.article_id},
         {"interactions", s.interactions},
         {"min_interactions", options_.min_interactions},
         {"rating", s.rating ? json(*s.rating) : json(nullptr)},
         {"history", messages}};
  if (!s.offered.empty()) j["candidates"] = s.offered_json;
  return j;
}

json SessionManager::create(SessionMode mode, const std::optional<std::string>& article_id) {
  if (corpus_.empty()) throw std::runtime_error("no articles available");
  auto s = std::make_shared<Session>();
  s->mode = mode;
  {
    std::lock_guard lock(mu_);
    const Article& article = article_id ? corpus_.get(*article_id)
                                        : corpus_.articles()[std::uniform_int_distribution<std::size_t>(
                                              0, corpus_.size() - 1)(rng_)];
    s->article_id = article.id;
    s->rng.seed(rng_());
    do {
      s->id = random_id("s-");
    } while (sessions_.count(s->id));
    sessions_.emplace(s->id, s);
  }
  std::lock_guard lock(s->mu);
  const Article& article = corpus_.get(s->article_id);
  json out{{"session_id", s->id}, {"mode", std::string(to_string(mode))}, {"article", {{"id", article.id}, {"text", article.text}}}};
  try {
    if (mode == SessionMode::kLive) {
      const auto opening = engine_->start_live(article, s->id);
      out["greeting"] = opening.greeting;
      out["reply"] = engine_->snapshot(s->id).history.back().text;
    } else {
      const auto opening = engine_->start_conversation(article, s->id);
      out["greeting"] = opening.greeting;
      out["candidates"] = present(*s, opening.turn);
    }
  } catch (...) {
    std::lock_guard guard(mu_);
    sessions_.erase(s->id);
    throw;
  }
  push_event(*s, "created", out);
  return out;
}

json SessionManager::get(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return view(*s);
}

json SessionManager::post_message(const std::string& session_id, const std::string& text) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->finished) throw ProtocolError("session is finished");
  if (trim(text).empty()) throw ValidationError("message text must not be blank");
  if (s->mode == SessionMode::kLive) {
    const auto turn = engine_->handle_turn(s->id, text);
    ++s->interactions;
    const auto& chosen = turn.candidates[*turn.chosen];
    json out{{"reply", chosen.text}, {"turn_index", turn.turn_index}, {"latency_ms", turn.latency.count()}};
    if (options_.reveal_models) {
      out["model"] = std::string(to_string(chosen.model));
      out["score"] = chosen.score;
    }
    push_event(*s, "reply", out);
    return out;
  }
  if (!s->offered.empty()) throw ProtocolError("select one of the offered candidates first");
  const auto turn = engine_->propose(s->id, text);
  json out{{"turn_index", turn.turn_index}, {"candidates", present(*s, turn)}};
  push_event(*s, "candidates", out);
  return out;
}

json SessionManager::select(const std::string& session_id, const std::string& candidate_id,
                            const std::optional<std::string>& reply) {
  auto s = find(session_id);
  json out;
  {
    std::lock_guard lock(s->mu);
    if (s->mode != SessionMode::kCollect) throw ProtocolError("selection is only available in collect mode");
    if (s->finished) throw ProtocolError("session is finished");
    if (s->retired_ids.count(candidate_id)) throw ProtocolError("candidate '" + candidate_id + "' was already used");
    auto it = std::find_if(s->offered.begin(), s->offered.end(),
                           [&](const auto& o) { return o.first == candidate_id; });
    if (it == s->offered.end()) throw ValidationError("unknown candidate '" + candidate_id + "'");
    if (reply && trim(*reply).empty()) throw ValidationError("reply text must not be blank");
    const Message message = engine_->commit(s->id, it->second);
    for (const auto& o : s->offered) s->retired_ids.insert(o.first);
    s->offered.clear();
    s->offered_json = json::array();
    ++s->interactions;
    out = {{"selected", {{"text", message.text}, {"turn_index", message.turn_index}}},
           {"interactions", s->interactions},
           {"can_finish", s->interactions >= options_.min_interactions}};
    push_event(*s, "selected", out);
  }
  if (reply) {
    const auto next = post_message(session_id, *reply);
    out["turn_index"] = next.at("turn_index");
    out["candidates"] = next.at("candidates");
  }
  return out;
}

json SessionManager::finish(const std::string& session_id, int rating) {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  if (s->finished) throw ProtocolError("session is already finished");
  if (rating < 1 || rating > 5) throw ValidationError("rating must be between 1 and 5");
  if (s->mode == SessionMode::kCollect && s->interactions < options_.min_interactions) {
    throw ProtocolError("at least " + std::to_string(options_.min_interactions) + " selections are required, got " +
                        std::to_string(s->interactions));
  }
  const auto log = engine_->finish(s->id);
  s->final_history = log.history;
  s->finished = true;
  s->rating = rating;
  s->offered.clear();
  s->offered_json = json::array();
  std::size_t records = 0;
  if (s->mode == SessionMode::kCollect) {
    const auto tuples = data::export_transitions(log, rating);
    records = tuples.size();
    if (!options_.dataset_out.empty() && !tuples.empty()) {
      std::lock_guard guard(export_mu_);
      data::append_dataset(options_.dataset_out, tuples);
      exported_records_ += records;
    }
  }
  json out{{"status", "finished"}, {"rating", rating}, {"records", records}};
  push_event(*s, "finished", out);
  return out;
}

json SessionManager::stats() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::size_t active = 0, finished = 0, live = 0, collect = 0;
  long interactions = 0;
  for (const auto& s : all) {
    std::lock_guard lock(s->mu);
    (s->finished ? finished : active) += 1;
    (s->mode == SessionMode::kLive ? live : collect) += 1;
    interactions += s->interactions;
  }
  std::uint64_t exported;
  {
    std::lock_guard lock(export_mu_);
    exported = exported_records_;
  }
  return {{"sessions", all.size()},
          {"active", active},
          {"finished", finished},
          {"live", live},
          {"collect", collect},
          {"interactions", interactions},
          {"exported_records", exported},
          {"articles", corpus_.size()},
          {"engine", engine_->stats().to_json()}};
}

std::vector<SessionEvent> SessionManager::events(const std::string& session_id, std::uint64_t after,
                                                 std::chrono::milliseconds wait) const {
  auto s = find(session_id);
  std::unique_lock lock(s->events_mu);
  s->events_cv.wait_for(lock, wait, [&] { return s->events.size() > after; });
  if (s->events.size() <= after) return {};
  return {s->events.begin() + static_cast<std::ptrdiff_t>(after), s->events.end()};
}

bool SessionManager::finished(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mu);
  return s->finished;
}

}  // namespace chorus::service
