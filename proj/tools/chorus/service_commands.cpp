#include <fstream>
#include <iostream>
#include <optional>

#include "chorus/data/dataset.hpp"
#include "chorus/orchestrator/simulate.hpp"
#include "chorus/responders/builtin.hpp"
#include "chorus/responders/wire.hpp"
#include "chorus/service/http.hpp"
#include "chorus/service/runtime.hpp"
#include "common.hpp"

namespace chorus::cli {
namespace {

struct ServeArgs {
  std::filesystem::path config;
  ResourceOptions resources;
  std::optional<std::string> host;
  std::optional<int> port;
  std::filesystem::path checkpoint;
  std::filesystem::path dataset_out;
  std::optional<std::string> policy;
  std::optional<int> deadline_ms;
  bool reveal = false;
};

service::ServiceConfig service_config(const ServeArgs& a) {
  service::ServiceConfig c;
  if (!a.config.empty()) {
    c = service::ServiceConfig::load(a.config);
  } else {
    c.data_dir = a.resources.data_dir;
  }
  if (!a.resources.embeddings.empty()) c.embeddings = a.resources.embeddings;
  if (a.host) c.host = *a.host;
  if (a.port) c.port = static_cast<std::uint16_t>(*a.port);
  if (!a.checkpoint.empty()) c.checkpoint = a.checkpoint;
  if (!a.dataset_out.empty()) c.dataset_out = a.dataset_out;
  if (a.policy) c.policy.kind = selection::policy_from_string(*a.policy);
  if (a.deadline_ms) c.engine.budget.response_deadline = std::chrono::milliseconds(*a.deadline_ms);
  if (a.reveal) c.reveal_models = true;
  c.validate();
  return c;
}

void add_serve_options(CLI::App& cmd, ServeArgs& a) {
  cmd.add_option("--config", a.config, "Service config JSON")->check(CLI::ExistingFile);
  a.resources.add_to(cmd);
  cmd.add_option("--checkpoint", a.checkpoint, "Trained scorer checkpoint")->check(CLI::ExistingFile);
  cmd.add_option("--policy", a.policy, "Selection policy: rule_based, argmax or sampled");
  cmd.add_option("--deadline-ms", a.deadline_ms, "Per-turn response deadline")->check(CLI::PositiveNumber);
}

void serve(const ServeArgs& a) {
  block_stop_signals();
  const auto config = service_config(a);
  auto rt = service::Runtime::build(config);
  rt->engine->set_health_listener([](const orchestrator::HealthEvent& e) {
    std::cerr << "health: " << e.to_json().dump() << '\n';
  });
  service::HttpServer::Options opt;
  opt.host = config.host;
  opt.port = config.port;
  service::HttpServer server(rt->sessions, opt);
  const auto port = server.start();
  std::cout << "listening on http://" << config.host << ':' << port << std::endl;
  wait_for_stop_signal();
  std::cout << "shutting down" << std::endl;
  server.stop();
}

struct GeneratorArgs {
  ResourceOptions resources;
  std::string kind;
  std::string host = "127.0.0.1";
  int port = 0;
  int delay_ms = 0;
  std::uint64_t seed = 0;
};

void generator(const GeneratorArgs& a) {
  block_stop_signals();
  const auto kind = responder_from_string(a.kind);
  auto pack = responders::ResponderPack::load(a.resources.data_dir, a.resources.load_text());
  responders::GeneratorServer::Options opt;
  opt.host = a.host;
  opt.port = static_cast<std::uint16_t>(a.port);
  opt.respond_delay = std::chrono::milliseconds(a.delay_ms);
  opt.seed = a.seed;
  responders::GeneratorServer server(kind, responders::make_builtin_factory(kind, pack), opt);
  server.start();
  std::cout << a.kind << " generator listening on " << a.host << ':' << server.port() << std::endl;
  wait_for_stop_signal();
  server.stop();
}

struct SimulateArgs {
  ServeArgs serve;
  int conversations = 4;
  int turns = 5;
  int concurrency = 4;
  std::uint64_t seed = 0;
  std::filesystem::path export_path;
  int rating = 3;
  std::filesystem::path report;
};

void simulate(const SimulateArgs& a) {
  auto config = service_config(a.serve);
  config.seed = a.seed;
  config.engine.seed = a.seed;
  auto rt = service::Runtime::build(config);
  const auto corpus_dir = config.corpus_dir.empty() ? config.data_dir / "articles" : config.corpus_dir;
  const auto corpus = service::ArticleCorpus::load(corpus_dir);
  if (corpus.empty()) throw ValidationError("no articles in " + corpus_dir.string());
  orchestrator::SimulationOptions opt;
  opt.conversations = a.conversations;
  opt.turns = a.turns;
  opt.concurrency = a.concurrency;
  opt.seed = a.seed;
  const auto report = orchestrator::simulate(*rt->engine, corpus.articles(), opt);
  auto summary = report.to_json();
  summary["engine"] = rt->engine->stats().to_json();
  if (!a.export_path.empty()) {
    std::vector<TransitionTuple> records;
    for (const auto& log : report.logs) {
      auto part = data::export_transitions(log, a.rating);
      records.insert(records.end(), part.begin(), part.end());
    }
    data::write_dataset(a.export_path, records);
    summary["exported_records"] = records.size();
  }
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw ValidationError("cannot write " + a.report.string());
    out << summary.dump(2) << '\n';
  }
  std::cout << "conversations " << report.logs.size() << ", turns " << report.turns << ", max latency "
            << report.max_latency.count() << " ms, mean " << report.mean_latency_ms << " ms, contaminated "
            << report.contaminated.size() << '\n';
  if (!report.contaminated.empty()) throw std::runtime_error("conversation state leaked between sessions");
}

}  // namespace

void register_service_commands(CLI::App& app) {
  auto serve_args = std::make_shared<ServeArgs>();
  auto* s = app.add_subcommand("serve", "Run the HTTP service");
  add_serve_options(*s, *serve_args);
  s->add_option("--host", serve_args->host, "Bind address");
  s->add_option("--port", serve_args->port, "Bind port; 0 picks a free one")->check(CLI::Range(0, 65535));
  s->add_option("--dataset-out", serve_args->dataset_out, "Append collected transitions here");
  s->add_flag("--reveal-models", serve_args->reveal, "Show responder names and scores to clients");
  s->callback([serve_args] { serve(*serve_args); });

  auto gen = std::make_shared<GeneratorArgs>();
  auto* g = app.add_subcommand("generator", "Serve one built-in responder over the generator wire protocol");
  gen->resources.add_to(*g);
  g->add_option("--kind", gen->kind, "Responder name, for example hred_twitter")->required();
  g->add_option("--host", gen->host, "Bind address")->capture_default_str();
  g->add_option("--port", gen->port, "Bind port; 0 picks a free one")->check(CLI::Range(0, 65535));
  g->add_option("--delay-ms", gen->delay_ms, "Artificial latency per reply")->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen->seed, "Seed for per-conversation responder state");
  g->callback([gen] { generator(*gen); });

  auto sim = std::make_shared<SimulateArgs>();
  auto* m = app.add_subcommand("simulate", "Drive scripted conversations headlessly");
  add_serve_options(*m, sim->serve);
  m->add_option("--conversations", sim->conversations, "Conversations to run")->check(CLI::PositiveNumber);
  m->add_option("--turns", sim->turns, "User messages per conversation")->check(CLI::PositiveNumber);
  m->add_option("--concurrency", sim->concurrency, "Conversations in flight")->check(CLI::PositiveNumber);
  m->add_option("--seed", sim->seed, "Seed for users, articles and selection");
  m->add_option("--export", sim->export_path, "Write the committed turns as a transitions dataset");
  m->add_option("--rating", sim->rating, "Final rating attached to exported conversations")->check(CLI::Range(1, 5));
  m->add_option("--report", sim->report, "Write the simulation summary as JSON");
  m->callback([sim] { simulate(*sim); });
}

}  // namespace chorus::cli
