#include "chorus/responders/responder.hpp"

namespace chorus::responders {

std::uint64_t derive_seed(std::uint64_t base, std::string_view conversation_id, ResponderKind kind) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : conversation_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer over the mixed inputs
  std::uint64_t z = base ^ h ^ (static_cast<std::uint64_t>(kind) + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace chorus::responders
