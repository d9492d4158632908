#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "chorus/features/extractor.hpp"
#include "chorus/orchestrator/engine.hpp"
#include "chorus/responders/builtin.hpp"
#include "chorus/scoring/scorer.hpp"
#include "chorus/selection/selector.hpp"
#include "chorus/text/resources.hpp"

namespace {

using namespace chorus;

struct Shared {
  std::shared_ptr<const text::TextResources> text = text::TextResources::load(CHORUS_DATA_DIR, {});
  std::shared_ptr<const features::FeatureExtractor> extractor = std::make_shared<features::FeatureExtractor>(text);
  std::shared_ptr<const selection::Selector> selector = selection::Selector::load(CHORUS_DATA_DIR, text);
  Article article = Article::from_text(
      "bench",
      "The Tibetan Plateau is a vast elevated plateau in Central Asia. It is the highest and largest plateau in the "
      "world. Many Tibetan herders move their yaks with the seasons. Lhasa is its largest city.");

  static const Shared& get() {
    static const Shared s;
    return s;
  }
};

ConversationState sample_state() {
  ConversationState s;
  s.conversation_id = "bench";
  s.article = Shared::get().article;
  s.append(Speaker::kBot, "Hi! Have a look at this article and tell me what you think.");
  s.append(Speaker::kBot, "What is the highest plateau in the world?");
  s.append(Speaker::kHuman, "I think it is the Tibetan Plateau, where do the herders live?");
  return s;
}

std::vector<Candidate> sample_candidates() {
  return {{ResponderKind::kHredTwitter, "that sounds amazing", 0.31},
          {ResponderKind::kHredReddit, "I have never been to Tibet", 0.42},
          {ResponderKind::kQuestionGen, "Where do the herders move their yaks?", 0.55},
          {ResponderKind::kQuestionAnswer, "Many Tibetan herders move their yaks with the seasons.", 0.81},
          {ResponderKind::kTopic, "I like to talk about geography.", 0.12},
          {ResponderKind::kFact, "Did you know that Lhasa is very high?", 0.27},
          {ResponderKind::kEntity, "Have you ever visited Lhasa?", 0.64},
          {ResponderKind::kSimpleAnswers, "Yes.", 0.09},
          {ResponderKind::kPattern, "Tell me more about that.", 0.2}};
}

void BM_FeatureExtraction(benchmark::State& state) {
  const auto& sh = Shared::get();
  const auto prepared = sh.extractor->prepare(sh.article);
  const auto conv = sample_state();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sh.extractor->extract(prepared, conv.history, "Many herders move their yaks").values);
  }
}
BENCHMARK(BM_FeatureExtraction);

// Scores nine candidates with the published small layer sizes.
void BM_SmallScoreTurn(benchmark::State& state) {
  const auto& sh = Shared::get();
  scoring::Checkpoint ck;
  ck.spec = scoring::make_spec(scoring::Architecture::kSmall, scoring::Objective::kReward,
                               static_cast<int>(sh.extractor->dimension()), scoring::small_reward_preset());
  ck.spec.zero_init_output = false;
  ck.config = scoring::small_reward_preset();
  ck.manifest = sh.extractor->manifest();
  ck.theta = scoring::Network::create(ck.spec)->initial_parameters(1);
  const scoring::NetworkScorer scorer(ck, sh.extractor);
  const auto conv = sample_state();
  std::vector<std::string> texts;
  for (const auto& c : sample_candidates()) texts.push_back(c.text);
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score_all(conv, texts));
}
BENCHMARK(BM_SmallScoreTurn)->Unit(benchmark::kMicrosecond);

// Scores nine candidates with the deep network; the recurrent size is the argument.
void BM_DeepScoreTurn(benchmark::State& state) {
  const auto& sh = Shared::get();
  scoring::Checkpoint ck;
  ck.spec = scoring::make_spec(scoring::Architecture::kDeep, scoring::Objective::kQ, sh.text->embeddings.dimension(),
                               scoring::deep_q_preset());
  ck.spec.recurrent_hidden = static_cast<int>(state.range(0));
  ck.spec.zero_init_output = false;
  ck.config = scoring::deep_q_preset();
  ck.theta = scoring::Network::create(ck.spec)->initial_parameters(1);
  const scoring::NetworkScorer scorer(ck, sh.extractor);
  const auto conv = sample_state();
  std::vector<std::string> texts;
  for (const auto& c : sample_candidates()) texts.push_back(c.text);
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score_all(conv, texts));
}
BENCHMARK(BM_DeepScoreTurn)->Arg(64)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Selection(benchmark::State& state) {
  const auto& sh = Shared::get();
  const auto conv = sample_state();
  const auto candidates = sample_candidates();
  const auto policy = static_cast<selection::PolicyKind>(state.range(0));
  std::mt19937_64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sh.selector->select(conv, candidates, rng, policy).order);
  state.SetLabel(std::string(selection::to_string(policy)));
}
BENCHMARK(BM_Selection)
    ->Arg(static_cast<int>(selection::PolicyKind::kRuleBased))
    ->Arg(static_cast<int>(selection::PolicyKind::kArgmax))
    ->Arg(static_cast<int>(selection::PolicyKind::kSampled));

// One user turn through the full fan-out with the nine built-in responders.
void BM_EngineTurn(benchmark::State& state) {
  const auto& sh = Shared::get();
  const auto pack = responders::ResponderPack::load(CHORUS_DATA_DIR, sh.text);
  orchestrator::EngineConfig cfg;
  cfg.budget.response_deadline = std::chrono::milliseconds(2000);
  cfg.budget.ping_timeout = std::chrono::milliseconds(10000);
  orchestrator::Engine engine(cfg, orchestrator::builtin_workers(pack), std::make_shared<scoring::ConstantScorer>(0.5),
                              sh.selector, responders::make_builtin_factory(ResponderKind::kFact, pack));
  const auto id = engine.start_live(sh.article).conversation_id;
  for (auto _ : state) benchmark::DoNotOptimize(engine.handle_turn(id, "where do the herders live?").chosen);
  engine.finish(id);
}
BENCHMARK(BM_EngineTurn)->Unit(benchmark::kMicrosecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
