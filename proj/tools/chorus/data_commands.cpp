#include <fstream>
#include <iostream>

#include "chorus/data/dataset.hpp"
#include "chorus/data/evaluation.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/selection/selector.hpp"
#include "common.hpp"

namespace chorus::cli {
namespace {

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

struct SplitArgs {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  data::SplitFractions fractions;
  std::uint64_t seed = 0;
  bool oversample = false;
};

void split(const SplitArgs& a) {
  a.fractions.validate();
  const auto records = data::read_dataset(a.input);
  auto parts = data::split_by_article(records, a.fractions, a.seed);
  if (a.oversample) parts.train = data::oversample_positives(parts.train, a.seed);
  std::filesystem::create_directories(a.out_dir);
  data::write_dataset(a.out_dir / "train.ndjson", parts.train);
  data::write_dataset(a.out_dir / "valid.ndjson", parts.valid);
  data::write_dataset(a.out_dir / "test.ndjson", parts.test);
  std::ofstream manifest(a.out_dir / "manifest.json");
  manifest << parts.manifest_json().dump(2) << '\n';
  std::cout << "train " << parts.train.size() << ", valid " << parts.valid.size() << ", test " << parts.test.size()
            << " records\n";
}

struct StatsArgs {
  std::filesystem::path input;
  bool json = false;
};

void stats(const StatsArgs& a) {
  const auto records = data::read_dataset(a.input);
  const auto st = data::corpus_stats(records);
  std::cout << (a.json ? st.to_json().dump(2) + "\n" : st.table());
}

struct EvalArgs {
  ResourceOptions resources;
  std::filesystem::path input;
  std::filesystem::path checkpoint;
  std::vector<std::string> policies{"rule_based", "argmax", "sampled"};
  std::size_t k = 0;
  int repetitions = 32;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path report;
};

void eval(const EvalArgs& a) {
  const auto text = a.resources.load_text();
  std::shared_ptr<const scoring::Scorer> scorer;
  if (a.checkpoint.empty()) {
    scorer = std::make_shared<scoring::ConstantScorer>(0.5);
  } else {
    scorer = std::make_shared<scoring::NetworkScorer>(scoring::Checkpoint::load(a.checkpoint),
                                                      std::make_shared<const features::FeatureExtractor>(text));
  }
  const auto selector = selection::Selector::load(a.resources.data_dir, text);
  const auto records = data::read_dataset(a.input);
  std::vector<std::string> warnings;
  const auto turns = data::group_turns(records, &warnings);
  print_warnings(warnings);
  data::EvalOptions opt;
  opt.max_k = a.k;
  opt.repetitions = a.repetitions;
  opt.seed = a.seed;
  opt.threads = a.threads;
  std::vector<data::EvalReport> reports;
  for (const auto& name : a.policies) {
    auto report = data::evaluate(turns, *scorer, *selector, selection::policy_from_string(name), opt);
    report.excluded = warnings.size();
    std::cout << report.table();
    reports.push_back(std::move(report));
  }
  if (!a.report.empty()) data::write_reports(a.report, reports);
}

}  // namespace

void register_data_commands(CLI::App& app) {
  auto sp = std::make_shared<SplitArgs>();
  auto* s = app.add_subcommand("split", "Split a dataset by article into train, valid and test");
  s->add_option("--in", sp->input, "Transitions dataset")->required()->check(CLI::ExistingFile);
  s->add_option("--out-dir", sp->out_dir, "Output directory")->required();
  s->add_option("--train", sp->fractions.train, "Train fraction")->capture_default_str();
  s->add_option("--valid", sp->fractions.valid, "Validation fraction")->capture_default_str();
  s->add_option("--test", sp->fractions.test, "Test fraction")->capture_default_str();
  s->add_option("--seed", sp->seed, "Shuffle seed");
  s->add_flag("--oversample", sp->oversample, "Balance positives in the train split");
  s->callback([sp] { split(*sp); });

  auto st = std::make_shared<StatsArgs>();
  auto* t = app.add_subcommand("stats", "Summarize a transitions dataset");
  t->add_option("--in", st->input, "Transitions dataset")->required()->check(CLI::ExistingFile);
  t->add_flag("--json", st->json, "Print JSON instead of a table");
  t->callback([st] { stats(*st); });

  auto ev = std::make_shared<EvalArgs>();
  auto* e = app.add_subcommand("eval", "Recall@k of selection policies on a dataset");
  ev->resources.add_to(*e);
  e->add_option("--in", ev->input, "Transitions dataset")->required()->check(CLI::ExistingFile);
  e->add_option("--checkpoint", ev->checkpoint, "Scorer checkpoint; constant scores when omitted")
      ->check(CLI::ExistingFile);
  e->add_option("--policy", ev->policies, "Policies to evaluate")->capture_default_str();
  e->add_option("--k", ev->k, "Largest k; 0 uses the largest candidate count");
  e->add_option("--repetitions", ev->repetitions, "Repetitions for randomized policies")->check(CLI::PositiveNumber);
  e->add_option("--seed", ev->seed, "Seed for randomized policies");
  e->add_option("--threads", ev->threads, "Worker threads; 0 uses every core");
  e->add_option("--report", ev->report, "Write <prefix>.json, .csv and .txt");
  e->callback([ev] { eval(*ev); });
}

}  // namespace chorus::cli
