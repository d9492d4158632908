#include "chorus/orchestrator/engine.hpp"

#include <algorithm>
#include <deque>

#include "chorus/responders/builtin.hpp"

namespace chorus::orchestrator {
namespace {

using Clock = std::chrono::steady_clock;

/// Replies for one turn. Shared by the engine and the workers; closed at the deadline.
class Collector {
 public:
  explicit Collector(std::vector<ResponderKind> expected) : expected_(std::move(expected)) {}

  /// Records a reply (or the absence of one). False when the turn is already closed.
  bool deliver(ResponderKind kind, std::optional<Candidate> candidate) {
    std::lock_guard lock(mu_);
    if (!open_) return false;
    answered_.push_back(kind);
    if (candidate) candidates_.push_back(std::move(*candidate));
    cv_.notify_all();
    return true;
  }

  bool open() const {
    std::lock_guard lock(mu_);
    return open_;
  }

  void wait_until(Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, deadline, [&] { return answered_.size() >= expected_.size(); });
  }

  /// Closes the turn; returns the candidates and the kinds that never answered.
  std::pair<std::vector<Candidate>, std::vector<ResponderKind>> close() {
    std::lock_guard lock(mu_);
    open_ = false;
    std::vector<ResponderKind> missing;
    for (ResponderKind k : expected_) {
      if (std::find(answered_.begin(), answered_.end(), k) == answered_.end()) missing.push_back(k);
    }
    return {std::move(candidates_), std::move(missing)};
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool open_ = true;
  std::vector<ResponderKind> expected_;
  std::vector<ResponderKind> answered_;
  std::vector<Candidate> candidates_;
};

struct PingToken {
  Clock::time_point sent = Clock::now();
  std::atomic<bool> answered{false};
};

struct Task {
  enum class Type { kWake, kRespond, kPing, kForget } type = Type::kPing;
  std::string conversation_id;
  std::shared_ptr<const Article> article;
  std::shared_ptr<const ConversationState> state;
  std::shared_ptr<Collector> collector;
  std::shared_ptr<PingToken> ping;
};

/// Body of one worker thread. Owned jointly by the thread and the engine so a
/// replaced worker can finish (or stay stuck in) its current task safely.
class WorkerCore {
 public:
  WorkerCore(ResponderKind kind, responders::ResponderFactory factory, std::shared_ptr<const scoring::Scorer> scorer,
             std::uint64_t seed)
      : kind_(kind), factory_(std::move(factory)), scorer_(std::move(scorer)), seed_(seed) {}

  void post(Task task) {
    {
      std::lock_guard lock(mu_);
      if (stop_) return;
      queue_.push_back(std::move(task));
    }
    cv_.notify_one();
  }

  /// Asks the thread to exit once its current task returns.
  void retire() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
      queue_.clear();
    }
    cv_.notify_all();
  }

  bool wait_exit(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    return exit_cv_.wait_for(lock, timeout, [&] { return exited_; });
  }

  bool crashed() const { return crashed_.load(); }
  std::string crash_reason() const {
    std::lock_guard lock(mu_);
    return crash_reason_;
  }

  void run() {
    for (;;) {
      Task task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
        if (stop_) break;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      try {
        handle(task);
      } catch (const std::exception& e) {
        fail(task, e.what());
        break;
      } catch (...) {
        fail(task, "unknown exception");
        break;
      }
    }
    std::lock_guard lock(mu_);
    exited_ = true;
    exit_cv_.notify_all();
  }

 private:
  void fail(const Task& task, std::string reason) {
    if (task.collector) task.collector->deliver(kind_, std::nullopt);
    std::lock_guard lock(mu_);
    crash_reason_ = std::move(reason);
    crashed_ = true;
  }

  void handle(const Task& task) {
    switch (task.type) {
      case Task::Type::kPing:
        task.ping->answered = true;
        return;
      case Task::Type::kForget:
        instances_.erase(task.conversation_id);
        return;
      case Task::Type::kWake: {
        auto inst = factory_(task.conversation_id, responders::derive_seed(seed_, task.conversation_id, kind_));
        if (!inst) throw std::runtime_error("factory returned no responder");
        inst->wake_up(*task.article);
        instances_[task.conversation_id] = std::move(inst);
        return;
      }
      case Task::Type::kRespond: {
        if (!task.collector->open()) return;  // stale request from an earlier turn
        const auto it = instances_.find(task.conversation_id);
        if (it == instances_.end()) {
          task.collector->deliver(kind_, std::nullopt);
          return;
        }
        auto text = it->second->respond(*task.state);
        if (!text || trim(*text).empty()) {
          task.collector->deliver(kind_, std::nullopt);
          return;
        }
        const double score = scorer_->score(*task.state, *text);
        task.collector->deliver(kind_, Candidate{kind_, std::move(*text), score});
        return;
      }
    }
  }

  ResponderKind kind_;
  responders::ResponderFactory factory_;
  std::shared_ptr<const scoring::Scorer> scorer_;
  std::uint64_t seed_;
  std::map<std::string, std::unique_ptr<responders::Responder>> instances_;  // worker thread only

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable exit_cv_;
  std::deque<Task> queue_;
  bool stop_ = false;
  bool exited_ = false;
  std::atomic<bool> crashed_{false};
  std::string crash_reason_;
};

nlohmann::json candidate_json(const Candidate& c) {
  return {{"model", to_string(c.model)}, {"text", c.text}, {"score", c.score}};
}

/// Head first, the rest by descending score.
std::vector<std::size_t> head_then_scores(std::span<const Candidate> candidates, std::size_t head) {
  std::vector<std::size_t> order{head};
  for (std::size_t i : selection::argmax_order(candidates)) {
    if (i != head) order.push_back(i);
  }
  return order;
}

constexpr std::uint64_t kSelectionStream = 0x5e1ec7ed5e1ec7edULL;

}  // namespace

struct Engine::Handle {
  ResponderKind kind = ResponderKind::kFact;
  responders::ResponderFactory factory;
  std::shared_ptr<WorkerCore> core;
  std::thread thread;
  WorkerHealth health = WorkerHealth::kAlive;
  std::shared_ptr<PingToken> ping;  // outstanding ping, if any
  Clock::time_point last_ping{};
  int consecutive_failures = 0;
};

struct Engine::Conversation {
  std::mutex mu;
  ConversationState state;
  std::shared_ptr<const Article> article;
  std::mt19937_64 rng;
  std::vector<TurnRecord> turns;
  std::optional<TurnRecord> pending;
  std::unique_ptr<responders::Responder> emergency;
  bool finished = false;
};

void TurnBudget::validate() const {
  if (response_deadline.count() <= 0) throw ValidationError("response_deadline must be positive");
  if (response_deadline >= ping_timeout) throw ValidationError("response_deadline must be below ping_timeout");
}

nlohmann::json EngineConfig::to_json() const {
  return {{"response_deadline_ms", budget.response_deadline.count()},
          {"ping_timeout_ms", budget.ping_timeout.count()},
          {"seed", seed},
          {"max_respawns", max_respawns}};
}

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
  EngineConfig c;
  c.budget.response_deadline =
      std::chrono::milliseconds(j.value("response_deadline_ms", c.budget.response_deadline.count()));
  c.budget.ping_timeout = std::chrono::milliseconds(j.value("ping_timeout_ms", c.budget.ping_timeout.count()));
  c.seed = j.value("seed", c.seed);
  c.max_respawns = j.value("max_respawns", c.max_respawns);
  c.budget.validate();
  if (c.max_respawns < 0) throw ValidationError("max_respawns must be non-negative");
  return c;
}

std::string_view to_string(WorkerHealth h) {
  switch (h) {
    case WorkerHealth::kAlive:
      return "alive";
    case WorkerHealth::kSuspect:
      return "suspect";
    case WorkerHealth::kDead:
      return "dead";
  }
  return "alive";
}

nlohmann::json HealthEvent::to_json() const {
  return {{"model", to_string(kind)},
          {"event", event},
          {"detail", detail},
          {"at_ms", std::chrono::duration_cast<std::chrono::milliseconds>(at.time_since_epoch()).count()}};
}

nlohmann::json TurnRecord::to_json() const {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : candidates) cands.push_back(candidate_json(c));
  nlohmann::json late_names = nlohmann::json::array();
  for (ResponderKind k : late) late_names.push_back(to_string(k));
  nlohmann::json j{{"conversation_id", conversation_id},
                   {"turn_index", turn_index},
                   {"user_message", user_message},
                   {"candidates", cands},
                   {"order", ranking.order},
                   {"rule", ranking.rule},
                   {"late", late_names},
                   {"emergency", emergency},
                   {"latency_ms", latency.count()}};
  j["chosen"] = chosen ? nlohmann::json(*chosen) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json EngineStats::to_json() const {
  nlohmann::json h = nlohmann::json::object();
  for (const auto& [k, v] : health) h[std::string(to_string(k))] = to_string(v);
  return {{"conversations_started", conversations_started},
          {"turns", turns},
          {"late_replies", late_replies},
          {"revives", revives},
          {"incidents", incidents},
          {"workers", h}};
}

Engine::Engine(EngineConfig config, std::vector<WorkerSpec> workers, std::shared_ptr<const scoring::Scorer> scorer,
               std::shared_ptr<const selection::Selector> selector, responders::ResponderFactory emergency)
    : config_(config), scorer_(std::move(scorer)), selector_(std::move(selector)), emergency_(std::move(emergency)) {
  config_.budget.validate();
  if (config_.max_respawns < 0) throw ValidationError("max_respawns must be non-negative");
  if (!scorer_) throw ValidationError("engine needs a scorer");
  if (!selector_) throw ValidationError("engine needs a selector");
  std::set<ResponderKind> seen;
  for (const auto& spec : workers) {
    if (!spec.factory) throw ValidationError("worker '" + std::string(to_string(spec.kind)) + "' has no factory");
    if (!seen.insert(spec.kind).second) {
      throw ValidationError("duplicate worker '" + std::string(to_string(spec.kind)) + "'");
    }
  }
  for (auto& spec : workers) {
    auto h = std::make_unique<Handle>();
    h->kind = spec.kind;
    h->factory = std::move(spec.factory);
    h->core = std::make_shared<WorkerCore>(h->kind, h->factory, scorer_, config_.seed);
    h->thread = std::thread([core = h->core] { core->run(); });
    workers_.push_back(std::move(h));
  }
  supervisor_ = std::thread([this] { supervise_loop(); });
}

Engine::~Engine() {
  stopping_ = true;
  {
    std::lock_guard lock(supervisor_mu_);
  }
  supervisor_cv_.notify_all();
  if (supervisor_.joinable()) supervisor_.join();
  std::lock_guard lock(workers_mu_);
  auto stop = [&](Handle& h) {
    h.core->retire();
    if (!h.thread.joinable()) return;
    // A worker stuck in a responder is left to finish on its own; it owns everything it touches.
    if (h.core->wait_exit(config_.budget.response_deadline)) {
      h.thread.join();
    } else {
      h.thread.detach();
    }
  };
  for (auto& h : workers_) stop(*h);
  for (auto& h : retired_) stop(*h);
}

void Engine::set_health_listener(std::function<void(const HealthEvent&)> listener) {
  std::lock_guard lock(events_mu_);
  listener_ = std::move(listener);
}

void Engine::emit(ResponderKind kind, std::string event, std::string detail) {
  HealthEvent e{kind, std::move(event), std::move(detail), std::chrono::system_clock::now()};
  std::function<void(const HealthEvent&)> listener;
  {
    std::lock_guard lock(events_mu_);
    events_.push_back(e);
    listener = listener_;
  }
  if (listener) listener(e);
}

std::vector<HealthEvent> Engine::health_events() const {
  std::lock_guard lock(events_mu_);
  return events_;
}

EngineStats Engine::stats() const {
  EngineStats s;
  {
    std::lock_guard lock(events_mu_);
    s = stats_;
  }
  std::lock_guard lock(workers_mu_);
  for (const auto& h : workers_) s.health[h->kind] = h->health;
  return s;
}

WorkerHealth Engine::health(ResponderKind kind) const {
  std::lock_guard lock(workers_mu_);
  for (const auto& h : workers_) {
    if (h->kind == kind) return h->health;
  }
  throw ValidationError("no worker for '" + std::string(to_string(kind)) + "'");
}

std::shared_ptr<Engine::Conversation> Engine::find(const std::string& id) const {
  std::lock_guard lock(conversations_mu_);
  const auto it = conversations_.find(id);
  if (it == conversations_.end()) throw ProtocolError("unknown conversation '" + id + "'");
  return it->second;
}

bool Engine::has_conversation(const std::string& conversation_id) const {
  std::lock_guard lock(conversations_mu_);
  return conversations_.contains(conversation_id);
}

Opening Engine::start_conversation(const Article& article, std::optional<std::string> conversation_id) {
  auto conv = std::make_shared<Conversation>();
  std::string id;
  {
    std::lock_guard lock(workers_mu_);
    const bool any_alive = std::any_of(workers_.begin(), workers_.end(),
                                       [](const auto& h) { return h->health != WorkerHealth::kDead; });
    if (!any_alive) throw std::runtime_error("every responder worker is dead");
    {
      std::lock_guard conv_lock(conversations_mu_);
      id = conversation_id ? *conversation_id : "conv-" + std::to_string(next_conversation_++);
      if (id.empty()) throw ValidationError("conversation id must not be empty");
      if (conversations_.contains(id)) throw ValidationError("conversation '" + id + "' already exists");
      conv->article = std::make_shared<const Article>(article);
      conv->state.conversation_id = id;
      conv->state.article = article;
      conv->state.append(Speaker::kBot, std::string(selection::kGreeting));
      conv->rng.seed(responders::derive_seed(config_.seed ^ kSelectionStream, id, ResponderKind::kFact));
      conversations_[id] = conv;
    }
    for (auto& h : workers_) {
      if (h->health == WorkerHealth::kDead) continue;
      h->core->post(Task{Task::Type::kWake, id, conv->article, nullptr, nullptr, nullptr});
    }
  }
  {
    std::lock_guard lock(events_mu_);
    ++stats_.conversations_started;
  }

  std::lock_guard lock(conv->mu);
  if (emergency_) {
    try {
      conv->emergency = emergency_(id, responders::derive_seed(config_.seed, id, ResponderKind::kFact) + 1);
      if (conv->emergency) conv->emergency->wake_up(article);
    } catch (const std::exception& e) {
      conv->emergency.reset();
      emit(ResponderKind::kFact, "incident", std::string("emergency responder unavailable: ") + e.what());
    }
  }

  TurnRecord record = fan_out(*conv, {ResponderKind::kQuestionGen, ResponderKind::kEntity}, "");
  if (record.candidates.empty()) {
    TurnRecord fact = fan_out(*conv, {ResponderKind::kFact}, "");
    record.candidates = std::move(fact.candidates);
    record.latency += fact.latency;
  }
  fill_empty(*conv, record);
  const auto head = selection::choose_opener(record.candidates, conv->rng).value_or(0);
  record.ranking = selection::Selection{head_then_scores(record.candidates, head), 0, false};
  conv->pending = record;
  return Opening{id, std::string(selection::kGreeting), std::move(record)};
}

Opening Engine::start_live(const Article& article, std::optional<std::string> conversation_id) {
  Opening opening = start_conversation(article, std::move(conversation_id));
  auto conv = find(opening.conversation_id);
  std::lock_guard lock(conv->mu);
  commit_locked(*conv, opening.turn.ranking.head());
  opening.turn.chosen = opening.turn.ranking.head();
  return opening;
}

TurnRecord Engine::fan_out(Conversation& conv, const std::vector<ResponderKind>& kinds,
                           const std::string& user_message, bool ping) {
  const auto start = Clock::now();
  TurnRecord record;
  record.conversation_id = conv.state.conversation_id;
  record.turn_index = conv.state.next_turn_index();
  record.user_message = user_message;

  auto snapshot = std::make_shared<const ConversationState>(conv.state);
  std::vector<ResponderKind> expected;
  std::vector<WorkerCore*> targets;
  std::shared_ptr<Collector> collector;
  {
    std::lock_guard lock(workers_mu_);
    for (auto& h : workers_) {
      if (h->health == WorkerHealth::kDead) continue;
      if (std::find(kinds.begin(), kinds.end(), h->kind) == kinds.end()) continue;
      expected.push_back(h->kind);
    }
    collector = std::make_shared<Collector>(expected);
    for (auto& h : workers_) {
      if (std::find(expected.begin(), expected.end(), h->kind) == expected.end()) continue;
      h->core->post(Task{Task::Type::kRespond, record.conversation_id, conv.article, snapshot, collector, nullptr});
    }
    if (ping) post_pings_locked();
  }
  collector->wait_until(start + config_.budget.response_deadline);
  auto [candidates, missing] = collector->close();

  // Arrival order is racy; responder order keeps selection reproducible under a seed.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.model < b.model; });
  record.candidates = std::move(candidates);
  record.late = std::move(missing);
  if (!record.late.empty()) {
    {
      std::lock_guard lock(events_mu_);
      stats_.late_replies += record.late.size();
    }
    for (ResponderKind k : record.late) {
      emit(k, "late_reply", "no reply within the deadline for " + record.conversation_id);
    }
  }
  record.latency = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  return record;
}

void Engine::fill_empty(Conversation& conv, TurnRecord& record) {
  if (!record.candidates.empty()) return;
  record.emergency = true;
  if (conv.emergency) {
    try {
      if (auto text = conv.emergency->respond(conv.state); text && !trim(*text).empty()) {
        const double score = scorer_->score(conv.state, *text);
        record.candidates.push_back(Candidate{ResponderKind::kFact, std::move(*text), score});
        return;
      }
    } catch (const std::exception& e) {
      emit(ResponderKind::kFact, "incident", std::string("emergency responder failed: ") + e.what());
    }
  }
  record.candidates.push_back(Candidate{ResponderKind::kFact, std::string(kApology), 0.0});
  {
    std::lock_guard lock(events_mu_);
    ++stats_.incidents;
  }
  emit(ResponderKind::kFact, "incident", "no candidate for " + record.conversation_id + "; apology sent");
}

TurnRecord Engine::propose_locked(Conversation& conv, const std::string& user_message) {
  if (conv.finished) throw ProtocolError("conversation '" + conv.state.conversation_id + "' is finished");
  if (conv.pending) throw ProtocolError("a reply is pending for '" + conv.state.conversation_id + "'");
  if (trim(user_message).empty()) throw ValidationError("user message must not be empty");
  conv.state.append(Speaker::kHuman, user_message);
  conv.state.bored_counter = selector_->update_bored_counter(conv.state.bored_counter, user_message);

  std::vector<ResponderKind> all(std::begin(kAllResponders), std::end(kAllResponders));
  TurnRecord record = fan_out(conv, all, user_message, true);
  fill_empty(conv, record);
  const auto t0 = Clock::now();
  record.ranking = selector_->select(conv.state, record.candidates, conv.rng);
  if (record.ranking.reset_bored) conv.state.bored_counter = 0;
  record.latency += std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0);
  conv.pending = record;
  return record;
}

Message Engine::commit_locked(Conversation& conv, std::size_t index) {
  if (conv.finished) throw ProtocolError("conversation '" + conv.state.conversation_id + "' is finished");
  if (!conv.pending) throw ProtocolError("no reply is pending for '" + conv.state.conversation_id + "'");
  if (index >= conv.pending->candidates.size()) {
    throw ProtocolError("candidate index " + std::to_string(index) + " is out of range");
  }
  conv.state.append(Speaker::kBot, conv.pending->candidates[index].text);
  conv.pending->chosen = index;
  conv.turns.push_back(std::move(*conv.pending));
  conv.pending.reset();
  {
    std::lock_guard lock(events_mu_);
    ++stats_.turns;
  }
  return conv.state.history.back();
}

TurnRecord Engine::propose(const std::string& conversation_id, const std::string& user_message) {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  return propose_locked(*conv, user_message);
}

Message Engine::commit(const std::string& conversation_id, std::size_t index) {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  return commit_locked(*conv, index);
}

TurnRecord Engine::handle_turn(const std::string& conversation_id, const std::string& user_message) {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  TurnRecord record = propose_locked(*conv, user_message);
  commit_locked(*conv, record.ranking.head());
  record.chosen = record.ranking.head();
  return record;
}

ConversationLog Engine::finish(const std::string& conversation_id) {
  auto conv = find(conversation_id);
  ConversationLog out;
  {
    std::lock_guard lock(conv->mu);
    if (conv->finished) throw ProtocolError("conversation '" + conversation_id + "' is finished");
    conv->finished = true;
    if (conv->pending) {
      conv->turns.push_back(std::move(*conv->pending));
      conv->pending.reset();
    }
    out = ConversationLog{conversation_id, conv->state.article, conv->state.history, conv->turns};
  }
  std::lock_guard lock(workers_mu_);
  {
    std::lock_guard conv_lock(conversations_mu_);
    conversations_.erase(conversation_id);
  }
  for (auto& h : workers_) h->core->post(Task{Task::Type::kForget, conversation_id, nullptr, nullptr, nullptr, nullptr});
  return out;
}

ConversationState Engine::snapshot(const std::string& conversation_id) const {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  return conv->state;
}

ConversationLog Engine::log(const std::string& conversation_id) const {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  return ConversationLog{conversation_id, conv->state.article, conv->state.history, conv->turns};
}

std::optional<TurnRecord> Engine::pending(const std::string& conversation_id) const {
  auto conv = find(conversation_id);
  std::lock_guard lock(conv->mu);
  return conv->pending;
}

void Engine::post_pings_locked() {
  const auto now = Clock::now();
  for (auto& h : workers_) {
    if (h->health == WorkerHealth::kDead) continue;
    if (h->ping && !h->ping->answered) continue;  // keep the original send time
    h->ping = std::make_shared<PingToken>();
    h->last_ping = now;
    h->core->post(Task{Task::Type::kPing, {}, nullptr, nullptr, nullptr, h->ping});
  }
}

void Engine::supervise_loop() {
  const auto tick = std::clamp(config_.budget.ping_timeout / 10, std::chrono::milliseconds(1),
                               std::chrono::milliseconds(100));
  std::unique_lock sleep_lock(supervisor_mu_);
  while (!stopping_) {
    supervisor_cv_.wait_for(sleep_lock, tick, [&] { return stopping_.load(); });
    if (stopping_) break;
    std::lock_guard lock(workers_mu_);
    const auto now = Clock::now();
    for (auto& h : workers_) check_worker(*h, now);
  }
}

void Engine::check_worker(Handle& h, Clock::time_point now) {
  if (h.health == WorkerHealth::kDead) return;
  if (h.ping && h.ping->answered) {
    h.ping.reset();
    h.consecutive_failures = 0;
    h.health = WorkerHealth::kAlive;
  }
  if (h.core->crashed()) {
    emit(h.kind, "crashed", h.core->crash_reason());
    respawn(h, "crashed");
    return;
  }
  if (!h.ping) return;
  const auto waited = now - h.ping->sent;
  if (waited > config_.budget.ping_timeout) {
    emit(h.kind, "ping_timeout", "no ping reply within " + std::to_string(config_.budget.ping_timeout.count()) + " ms");
    respawn(h, "ping timeout");
  } else if (waited > config_.budget.response_deadline) {
    h.health = WorkerHealth::kSuspect;
  }
}

void Engine::respawn(Handle& h, const std::string& reason) {
  auto retired = std::make_unique<Handle>();
  retired->kind = h.kind;
  retired->core = std::move(h.core);
  retired->thread = std::move(h.thread);
  retired->core->retire();
  retired_.push_back(std::move(retired));
  h.ping.reset();

  if (h.consecutive_failures >= config_.max_respawns) {
    h.health = WorkerHealth::kDead;
    h.core = std::make_shared<WorkerCore>(h.kind, h.factory, scorer_, config_.seed);  // idle placeholder, never run
    h.core->retire();
    emit(h.kind, "dead", "gave up after " + std::to_string(h.consecutive_failures) + " respawns (" + reason + ")");
    return;
  }
  ++h.consecutive_failures;
  h.core = std::make_shared<WorkerCore>(h.kind, h.factory, scorer_, config_.seed);
  h.thread = std::thread([core = h.core] { core->run(); });
  h.health = WorkerHealth::kAlive;

  std::vector<std::pair<std::string, std::shared_ptr<const Article>>> active;
  {
    std::lock_guard lock(conversations_mu_);
    for (const auto& [id, conv] : conversations_) active.emplace_back(id, conv->article);
  }
  for (auto& [id, article] : active) h.core->post(Task{Task::Type::kWake, id, article, nullptr, nullptr, nullptr});
  {
    std::lock_guard lock(events_mu_);
    ++stats_.revives;
  }
  emit(h.kind, "revived", reason + "; replayed " + std::to_string(active.size()) + " wake-ups");

  // Reap replaced workers that have since exited.
  std::erase_if(retired_, [](const std::unique_ptr<Handle>& r) {
    if (!r->core->wait_exit(std::chrono::milliseconds(0))) return false;
    if (r->thread.joinable()) r->thread.join();
    return true;
  });
}

std::vector<WorkerSpec> builtin_workers(const std::shared_ptr<const responders::ResponderPack>& pack,
                                        const std::set<ResponderKind>& enabled) {
  std::vector<WorkerSpec> out;
  for (ResponderKind k : kAllResponders) {
    if (enabled.contains(k)) out.push_back(WorkerSpec{k, responders::make_builtin_factory(k, pack)});
  }
  return out;
}

std::vector<WorkerSpec> builtin_workers(const std::shared_ptr<const responders::ResponderPack>& pack) {
  return builtin_workers(pack, std::set<ResponderKind>(std::begin(kAllResponders), std::end(kAllResponders)));
}

}  // namespace chorus::orchestrator
