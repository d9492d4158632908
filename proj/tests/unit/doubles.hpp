#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "chorus/orchestrator/engine.hpp"
#include "chorus/scoring/scorer.hpp"

namespace chorus::testing {

/// Fault knobs shared by every instance a stub factory creates.
struct StubControl {
  std::chrono::milliseconds delay{0};
  std::atomic<int> crash_wakes{0};  // throw on this many wake-ups
  std::atomic<bool> crash_always{false};
  std::atomic<int> hangs{0};  // block this many respond() calls until released
  std::atomic<int> wakes{0};
  std::atomic<int> responds{0};
  bool silent = false;
  std::mutex mu;
  std::condition_variable cv;
  bool released = false;

  void release() {
    {
      std::lock_guard lock(mu);
      released = true;
    }
    cv.notify_all();
  }
};

/// Replies with its kind and the last user message.
class StubResponder : public responders::Responder {
 public:
  StubResponder(ResponderKind kind, std::shared_ptr<StubControl> ctl) : kind_(kind), ctl_(std::move(ctl)) {}
  ResponderKind kind() const override { return kind_; }
  void wake_up(const Article&) override {
    ++ctl_->wakes;
    if (ctl_->crash_always || ctl_->crash_wakes.fetch_sub(1) > 0) throw std::runtime_error("stub crash");
  }
  std::optional<std::string> respond(const ConversationState& state) override {
    ++ctl_->responds;
    if (ctl_->hangs.fetch_sub(1) > 0) {
      std::unique_lock lock(ctl_->mu);
      ctl_->cv.wait_for(lock, std::chrono::seconds(3), [&] { return ctl_->released; });
    }
    if (ctl_->delay.count() > 0) std::this_thread::sleep_for(ctl_->delay);
    if (ctl_->silent) return std::nullopt;
    const Message* user = state.last_human();
    return std::string(to_string(kind_)) + " heard " + (user ? user->text : std::string("nothing"));
  }

 private:
  ResponderKind kind_;
  std::shared_ptr<StubControl> ctl_;
};

/// One stub worker per responder kind, each with its own controls.
struct Rig {
  std::map<ResponderKind, std::shared_ptr<StubControl>> controls;
  std::vector<orchestrator::WorkerSpec> specs;

  Rig() : Rig(std::vector<ResponderKind>(std::begin(kAllResponders), std::end(kAllResponders))) {}
  explicit Rig(const std::vector<ResponderKind>& kinds) {
    for (ResponderKind k : kinds) {
      auto ctl = std::make_shared<StubControl>();
      controls[k] = ctl;
      specs.push_back({k, [k, ctl](const std::string&, std::uint64_t) {
                         return std::make_unique<StubResponder>(k, ctl);
                       }});
    }
  }
  StubControl& operator[](ResponderKind k) { return *controls.at(k); }
};

/// Scores 1 for candidates containing " good ", 0 otherwise.
class OracleScorer : public scoring::Scorer {
 public:
  double score(const ConversationState&, std::string_view candidate) const override {
    return candidate.find(" good ") != std::string_view::npos ? 1.0 : 0.0;
  }
  bool probabilistic() const override { return true; }
};

/// Uniform pseudo-random score from a hash of the candidate text.
class HashScorer : public scoring::Scorer {
 public:
  explicit HashScorer(double scale = 1.0) : scale_(scale) {}
  double score(const ConversationState&, std::string_view candidate) const override {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : candidate) h = (h ^ c) * 1099511628211ULL;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return scale_ * static_cast<double>(h >> 11) / 9007199254740992.0;
  }
  bool probabilistic() const override { return scale_ <= 1.0; }

 private:
  double scale_;
};

}  // namespace chorus::testing
