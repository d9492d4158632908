#include "chorus/service/runtime.hpp"

#include <fstream>

#include "chorus/features/extractor.hpp"
#include "chorus/responders/builtin.hpp"
#include "chorus/responders/wire.hpp"
#include "chorus/scoring/checkpoint.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::service {
namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {"host",      "port",       "data_dir", "corpus_dir",    "embeddings",
                                     "checkpoint", "topic_model", "dataset_out", "policy",    "engine",
                                     "enabled",   "generators", "reveal_models", "min_interactions", "seed"};

std::filesystem::path resolve(const json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

GeneratorEndpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ValidationError("generator endpoint must be host:port, got '" + text + "'");
  GeneratorEndpoint e;
  e.host = text.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("bad port in generator endpoint '" + text + "'");
  }
  if (port < 1 || port > 65535) throw ValidationError("bad port in generator endpoint '" + text + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const std::filesystem::path& base) {
  if (!j.is_object()) throw ValidationError("service config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ValidationError("unknown service config key '" + key + "'");
  }
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    const int port = j.value("port", static_cast<int>(c.port));
    if (port < 0 || port > 65535) throw ValidationError("port must be in 0..65535");
    c.port = static_cast<std::uint16_t>(port);
    c.data_dir = resolve(j, "data_dir", base);
    c.corpus_dir = resolve(j, "corpus_dir", base);
    c.embeddings = resolve(j, "embeddings", base);
    c.checkpoint = resolve(j, "checkpoint", base);
    c.topic_model = resolve(j, "topic_model", base);
    c.dataset_out = resolve(j, "dataset_out", base);
    if (j.contains("policy")) c.policy = selection::SelectionPolicy::from_json(j.at("policy"));
    if (j.contains("engine")) c.engine = orchestrator::EngineConfig::from_json(j.at("engine"));
    if (j.contains("enabled")) {
      for (const auto& name : j.at("enabled")) c.enabled.insert(responder_from_string(name.get<std::string>()));
    }
    if (j.contains("generators")) {
      for (const auto& [name, endpoint] : j.at("generators").items()) {
        c.generators[responder_from_string(name)] = parse_endpoint(endpoint.get<std::string>());
      }
    }
    c.reveal_models = j.value("reveal_models", c.reveal_models);
    c.min_interactions = j.value("min_interactions", c.min_interactions);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("service config: ") + e.what());
  }
  c.validate();
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read service config " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("service config " + path.string() + " is not valid JSON");
  return from_json(j, path.parent_path());
}

json ServiceConfig::to_json() const {
  json enabled_json = json::array();
  for (ResponderKind k : enabled) enabled_json.push_back(std::string(to_string(k)));
  json gens = json::object();
  for (const auto& [k, e] : generators) gens[std::string(to_string(k))] = e.host + ":" + std::to_string(e.port);
  return {{"host", host},
          {"port", port},
          {"data_dir", data_dir.string()},
          {"corpus_dir", corpus_dir.string()},
          {"embeddings", embeddings.string()},
          {"checkpoint", checkpoint.string()},
          {"topic_model", topic_model.string()},
          {"dataset_out", dataset_out.string()},
          {"policy", policy.to_json()},
          {"engine", engine.to_json()},
          {"enabled", enabled_json},
          {"generators", gens},
          {"reveal_models", reveal_models},
          {"min_interactions", min_interactions},
          {"seed", seed}};
}

void ServiceConfig::validate() const {
  if (data_dir.empty()) throw ValidationError("data_dir is required");
  if (host.empty()) throw ValidationError("host must not be empty");
  if (min_interactions < 0) throw ValidationError("min_interactions must be non-negative");
  policy.validate();
  engine.budget.validate();
  for (const auto& [kind, endpoint] : generators) {
    if (endpoint.port == 0) throw ValidationError("generator for " + std::string(to_string(kind)) + " needs a port");
  }
}

std::unique_ptr<Runtime> Runtime::build(const ServiceConfig& config) {
  config.validate();
  auto rt = std::make_unique<Runtime>();
  rt->config = config;
  rt->text = text::TextResources::load(config.data_dir, config.embeddings);
  rt->pack = responders::ResponderPack::load(config.data_dir, rt->text, config.topic_model);
  if (config.checkpoint.empty()) {
    rt->scorer = std::make_shared<scoring::ConstantScorer>(0.5);
  } else {
    auto extractor = std::make_shared<const features::FeatureExtractor>(rt->text);
    rt->scorer = std::make_shared<scoring::NetworkScorer>(scoring::Checkpoint::load(config.checkpoint), extractor);
  }
  rt->selector = selection::Selector::load(config.data_dir, rt->text, config.policy);

  std::vector<orchestrator::WorkerSpec> workers;
  for (ResponderKind kind : kAllResponders) {
    if (!config.enabled.empty() && !config.enabled.count(kind)) continue;
    auto remote = config.generators.find(kind);
    if (remote != config.generators.end()) {
      workers.push_back({kind, responders::make_bridge_factory(kind, remote->second.host, remote->second.port,
                                                               config.engine.budget.response_deadline)});
    } else {
      workers.push_back({kind, responders::make_builtin_factory(kind, rt->pack)});
    }
  }
  if (workers.empty()) throw ValidationError("no responder is enabled");
  rt->engine = std::make_shared<orchestrator::Engine>(config.engine, std::move(workers), rt->scorer, rt->selector,
                                                      responders::make_builtin_factory(ResponderKind::kFact, rt->pack));

  const auto corpus_dir = config.corpus_dir.empty() ? config.data_dir / "articles" : config.corpus_dir;
  SessionOptions options;
  options.min_interactions = config.min_interactions;
  options.reveal_models = config.reveal_models;
  options.dataset_out = config.dataset_out;
  options.seed = config.seed;
  rt->sessions = std::make_shared<SessionManager>(rt->engine, ArticleCorpus::load(corpus_dir), options);
  return rt;
}

}  // namespace chorus::service
