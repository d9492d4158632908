#include <fstream>
#include <iomanip>
#include <iostream>

#include "chorus/data/dataset.hpp"
#include "chorus/scoring/checkpoint.hpp"
#include "chorus/scoring/search.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/scoring/training.hpp"
#include "common.hpp"

namespace chorus::cli {
namespace {

using scoring::Architecture;
using scoring::Objective;

struct TrainArgs {
  ResourceOptions resources;
  std::filesystem::path train;
  std::filesystem::path valid;
  std::string arch = "small";
  std::string objective = "reward";
  std::filesystem::path config;  // TrainConfig JSON
  std::vector<int> hidden;
  std::optional<std::string> optimizer;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<int> patience;
  std::optional<int> epochs;
  std::optional<double> dropout;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

/// Loaded data and encoders for one architecture.
struct Workspace {
  std::shared_ptr<const text::TextResources> text;
  std::shared_ptr<const features::FeatureExtractor> extractor;
  std::unique_ptr<scoring::InputEncoder> encoder;
  std::vector<TransitionTuple> train;
  std::vector<TransitionTuple> valid;
  std::vector<scoring::LabeledSample> labeled_train, labeled_valid;
  std::vector<scoring::QSample> q_train, q_valid;
};

Workspace load_workspace(const TrainArgs& a, Architecture arch, Objective objective) {
  Workspace w;
  w.text = a.resources.load_text();
  w.extractor = std::make_shared<const features::FeatureExtractor>(w.text);
  w.encoder = std::make_unique<scoring::InputEncoder>(arch, w.extractor);
  w.train = data::read_dataset(a.train);
  w.valid = data::read_dataset(a.valid);
  if (objective == Objective::kReward) {
    w.labeled_train = data::labeled_samples(w.train, *w.encoder);
    w.labeled_valid = data::labeled_samples(w.valid, *w.encoder);
  } else {
    w.q_train = data::q_samples(w.train, *w.encoder);
    w.q_valid = data::q_samples(w.valid, *w.encoder);
  }
  return w;
}

scoring::TrainConfig base_config(const TrainArgs& a, Architecture arch, Objective objective) {
  scoring::TrainConfig c;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("training config " + a.config.string() + " is not valid JSON");
    c = scoring::TrainConfig::from_json(j);
  } else if (arch == Architecture::kSmall && objective == Objective::kReward) {
    c = scoring::small_reward_preset();
  } else if (arch == Architecture::kDeep && objective == Objective::kQ) {
    c = scoring::deep_q_preset();
  }
  if (a.optimizer) c.optimizer = scoring::optimizer_from_string(*a.optimizer);
  if (a.learning_rate) c.learning_rate = *a.learning_rate;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.patience) c.patience = *a.patience;
  if (a.epochs) c.max_episodes = *a.epochs;
  if (a.dropout) c.dropout = *a.dropout;
  if (a.seed) c.seed = *a.seed;
  c.validate();
  return c;
}

scoring::NetworkSpec spec_for(const TrainArgs& a, const Workspace& w, Architecture arch, Objective objective,
                              const scoring::TrainConfig& cfg) {
  const int input_dim = arch == Architecture::kSmall ? static_cast<int>(w.extractor->dimension())
                                                     : w.text->embeddings.dimension();
  auto spec = scoring::make_spec(arch, objective, input_dim, cfg);
  if (!a.hidden.empty()) (arch == Architecture::kSmall ? spec.hidden : spec.head_hidden) = a.hidden;
  spec.validate();
  return spec;
}

scoring::TrainResult run_training(const scoring::Network& net, const Workspace& w, Objective objective,
                                  const scoring::TrainConfig& cfg, const scoring::EpochCallback& on_epoch) {
  if (objective == Objective::kReward) return scoring::train_supervised(net, w.labeled_train, w.labeled_valid, cfg, on_epoch);
  return scoring::train_fitted_q(net, w.q_train, w.q_valid, cfg, on_epoch);
}

struct TrainCommand : TrainArgs {
  std::filesystem::path out;
  std::filesystem::path history;
};

void train(const TrainCommand& a) {
  const auto arch = scoring::architecture_from_string(a.arch);
  const auto objective = scoring::objective_from_string(a.objective);
  const auto cfg = base_config(a, arch, objective);
  const auto w = load_workspace(a, arch, objective);
  const auto spec = spec_for(a, w, arch, objective, cfg);
  const auto net = scoring::Network::create(spec);
  std::cout << "training " << a.arch << '/' << a.objective << " on " << w.train.size() << " records, "
            << net->parameter_count() << " parameters\n";
  const auto metric_name = objective == Objective::kReward ? "valid F1" : "valid Huber";
  const auto result = run_training(*net, w, objective, cfg, [&](const scoring::EpochRecord& e) {
    if (!a.quiet) {
      std::cout << "epoch " << std::setw(4) << e.epoch << "  train loss " << std::setprecision(6) << e.train_loss << "  "
                << metric_name << ' ' << e.valid_metric << "  patience " << e.patience_left << std::endl;
    }
  });
  scoring::Checkpoint ck;
  ck.spec = spec;
  ck.config = cfg;
  if (arch == Architecture::kSmall) ck.manifest = w.extractor->manifest();
  ck.theta = result.theta;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : result.history) hist.push_back(e.to_json());
  ck.metadata = {{"train", a.train.string()},
                 {"valid", a.valid.string()},
                 {"best_epoch", result.best_epoch},
                 {"best_metric", result.best_metric},
                 {"early_stopped", result.early_stopped}};
  ck.save(a.out);
  if (!a.history.empty()) {
    std::ofstream out(a.history);
    out << hist.dump(2) << '\n';
  }
  std::cout << "best epoch " << result.best_epoch << ", " << metric_name << ' ' << result.best_metric << ", saved "
            << a.out.string() << '\n';
}

struct SearchCommand : TrainArgs {
  int trials = 20;
  std::uint64_t search_seed = 0;
  std::filesystem::path log;
  std::filesystem::path best;
};

void hpsearch(const SearchCommand& a) {
  const auto arch = scoring::architecture_from_string(a.arch);
  const auto objective = scoring::objective_from_string(a.objective);
  const auto base = base_config(a, arch, objective);
  const auto w = load_workspace(a, arch, objective);
  const scoring::SearchSpace space;
  const auto table = scoring::hyperparameter_search(
      space, base, a.trials, a.search_seed,
      [&](const scoring::TrainConfig& cfg) {
        const auto net = scoring::Network::create(spec_for(a, w, arch, objective, cfg));
        const auto result = run_training(*net, w, objective, cfg, {});
        // higher is better: F1 as is, Huber loss negated
        const double metric = objective == Objective::kReward ? result.best_metric : -result.best_metric;
        if (!a.quiet) std::cout << "trial " << cfg.to_json().dump() << " -> " << metric << std::endl;
        return metric;
      },
      a.log);
  std::cout << "rank  metric      config\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& t = table[i];
    std::cout << std::setw(4) << i + 1 << "  " << std::setw(10)
              << (t.metric ? std::to_string(*t.metric) : "failed") << "  " << t.config.to_json().dump() << '\n';
  }
  if (!a.best.empty() && !table.empty() && table.front().metric) {
    std::ofstream out(a.best);
    out << table.front().config.to_json().dump(2) << '\n';
  }
}

void add_train_options(CLI::App& cmd, TrainArgs& a) {
  a.resources.add_to(cmd);
  cmd.add_option("--train", a.train, "Training transitions")->required()->check(CLI::ExistingFile);
  cmd.add_option("--valid", a.valid, "Validation transitions")->required()->check(CLI::ExistingFile);
  cmd.add_option("--arch", a.arch, "small or deep")->check(CLI::IsMember({"small", "deep"}))->capture_default_str();
  cmd.add_option("--objective", a.objective, "reward or q")->check(CLI::IsMember({"reward", "q"}))->capture_default_str();
  cmd.add_option("--config", a.config, "Training config JSON")->check(CLI::ExistingFile);
  cmd.add_option("--hidden", a.hidden, "Hidden sizes of the trunk (small) or heads (deep)");
  cmd.add_option("--optimizer", a.optimizer, "adam, sgd, adagrad, adadelta or rmsprop");
  cmd.add_option("--lr", a.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  cmd.add_option("--batch-size", a.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd.add_option("--patience", a.patience, "Early-stopping patience in epochs")->check(CLI::PositiveNumber);
  cmd.add_option("--epochs", a.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  cmd.add_option("--dropout", a.dropout, "Drop probability")->check(CLI::Range(0.0, 0.99));
  cmd.add_option("--seed", a.seed, "Initialization and shuffling seed");
  cmd.add_flag("--quiet", a.quiet, "Suppress per-epoch output");
}

}  // namespace

void register_training_commands(CLI::App& app) {
  auto tr = std::make_shared<TrainCommand>();
  auto* t = app.add_subcommand("train", "Train a scoring network and save a checkpoint");
  add_train_options(*t, *tr);
  t->add_option("--out", tr->out, "Checkpoint path")->required();
  t->add_option("--history", tr->history, "Write per-epoch metrics as JSON");
  t->callback([tr] { train(*tr); });

  auto hs = std::make_shared<SearchCommand>();
  auto* h = app.add_subcommand("hpsearch", "Random hyper-parameter search");
  add_train_options(*h, *hs);
  h->add_option("--trials", hs->trials, "Trials to run")->check(CLI::PositiveNumber)->capture_default_str();
  h->add_option("--search-seed", hs->search_seed, "Seed for drawing configurations");
  h->add_option("--log", hs->log, "Trial log (JSON lines); existing trials are reused");
  h->add_option("--best", hs->best, "Write the best configuration as JSON");
  h->callback([hs] { hpsearch(*hs); });
}

}  // namespace chorus::cli
