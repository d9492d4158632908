#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "chorus/orchestrator/engine.hpp"
#include "chorus/selection/selector.hpp"
#include "chorus/service/sessions.hpp"

namespace chorus::service {

/// Remote generator endpoint for a responder kind.
struct GeneratorEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// Everything needed to stand up the service. Relative paths resolve against
/// the directory of the config file when loaded with load().
struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir;  // responder resource pack
  std::filesystem::path corpus_dir;  // articles; defaults to <data_dir>/articles
  std::filesystem::path embeddings;  // word2vec text file; empty uses synthetic vectors
  std::filesystem::path checkpoint;  // trained scorer; empty scores every candidate 0.5
  std::filesystem::path topic_model;  // empty trains the shipped topic corpus at start-up
  std::filesystem::path dataset_out;  // collect-mode transitions; empty disables export
  selection::SelectionPolicy policy;
  orchestrator::EngineConfig engine;
  std::set<ResponderKind> enabled;  // empty enables all nine
  std::map<ResponderKind, GeneratorEndpoint> generators;  // served remotely instead of in-process
  bool reveal_models = false;
  int min_interactions = 5;
  std::uint64_t seed = 0;

  /// Throws ValidationError on unknown keys or invalid values.
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static ServiceConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

/// Wired-up service components.
struct Runtime {
  ServiceConfig config;
  std::shared_ptr<const text::TextResources> text;
  std::shared_ptr<const responders::ResponderPack> pack;
  std::shared_ptr<const scoring::Scorer> scorer;
  std::shared_ptr<const selection::Selector> selector;
  std::shared_ptr<orchestrator::Engine> engine;
  std::shared_ptr<SessionManager> sessions;

  static std::unique_ptr<Runtime> build(const ServiceConfig& config);
};

}  // namespace chorus::service
