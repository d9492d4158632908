#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "chorus/model/types.hpp"

namespace chorus::responders {

/// One generator of the ensemble, bound to a single conversation.
///
/// wake_up() is called exactly once with the article before any respond().
/// respond() may return nothing when the generator has no reply for this turn.
class Responder {
 public:
  virtual ~Responder() = default;

  virtual ResponderKind kind() const = 0;
  virtual void wake_up(const Article& article) = 0;
  virtual std::optional<std::string> respond(const ConversationState& state) = 0;
};

/// Creates a fresh responder for one conversation. The seed fixes the
/// instance's random stream so replies are reproducible.
using ResponderFactory =
    std::function<std::unique_ptr<Responder>(const std::string& conversation_id, std::uint64_t seed)>;

/// Deterministic per-(conversation, responder) seed derived from an engine seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view conversation_id, ResponderKind kind);

}  // namespace chorus::responders
