#include "chorus/responders/builtin.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "chorus/text/lexicons.hpp"
#include "chorus/text/tokenize.hpp"

namespace chorus::responders {
namespace {

constexpr std::string_view kTopicSlot = "<topic>";
constexpr std::string_view kFactSlot = "<fact>";
constexpr std::string_view kFactSentenceSlot = "<fact sentence>";

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::vector<std::string> require_lines(const std::filesystem::path& path) {
  auto lines = text::read_resource_lines(path);
  if (lines.empty()) throw ValidationError("resource file is empty: " + path.string());
  return lines;
}

std::vector<std::string> require_slot(std::vector<std::string> lines, std::string_view slot,
                                      const std::filesystem::path& path) {
  for (const auto& l : lines) {
    if (l.find(slot) == std::string::npos) {
      throw ValidationError(path.string() + ": line lacks " + std::string(slot) + ": " + l);
    }
  }
  return lines;
}

std::vector<std::string> history_words(const ConversationState& state) {
  std::vector<std::string> words;
  for (const auto& m : state.history) {
    for (auto& w : text::words_only(text::tokenize(m.text))) words.push_back(std::move(w));
  }
  return words;
}

std::set<std::string> content_words(std::string_view s, const text::Lexicons& lex) {
  std::set<std::string> out;
  for (auto& w : text::words_only(text::tokenize(s))) {
    if (!lex.stop_words.contains(w)) out.insert(std::move(w));
  }
  return out;
}

bool asks_question(const ConversationState& state, const text::Lexicons& lex) {
  const Message* m = state.last_human();
  if (m == nullptr) return false;
  return classify_message_types(m->text, lex).contains(text::MessageType::kQuestion);
}

// Lowercases a leading function word so the fact reads naturally mid-sentence.
std::string inline_fact(const std::string& fact, const text::Lexicons& lex) {
  const auto toks = text::tokenize(fact);
  if (toks.empty() || !lex.stop_words.contains(toks.front())) return fact;
  std::string out = fact;
  out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- FactBase

FactBase FactBase::build(std::vector<std::string> facts, std::vector<std::string> templates,
                         std::vector<std::string> prefixes, const text::EmbeddingStore& store) {
  if (facts.empty()) throw ValidationError("fact list is empty");
  FactBase base;
  base.matrix.resize(static_cast<Eigen::Index>(facts.size()), store.dimension());
  for (std::size_t i = 0; i < facts.size(); ++i) {
    const auto words = text::words_only(text::tokenize(facts[i]));
    base.matrix.row(static_cast<Eigen::Index>(i)) = text::avg_embedding(words, store).transpose();
  }
  base.facts = std::move(facts);
  base.templates = std::move(templates);
  base.question_prefixes = std::move(prefixes);
  return base;
}

std::optional<std::size_t> FactBase::nearest(const Eigen::VectorXd& conversation,
                                             const std::set<std::size_t>& used) const {
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (used.contains(i)) continue;
    const double dist = 1.0 - text::cosine_sim(matrix.row(static_cast<Eigen::Index>(i)).transpose(), conversation);
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

// ---------------------------------------------------------------- loaders

std::vector<EntityTemplate> load_entity_templates(const std::filesystem::path& path) {
  std::vector<EntityTemplate> out;
  for (const auto& line : require_lines(path)) {
    const auto open = line.find('{');
    const auto close = open == std::string::npos ? open : line.find('}', open);
    if (close == std::string::npos) throw ValidationError("entity template without a {kind} slot: " + line);
    out.push_back(EntityTemplate{text::entity_kind_from_string(line.substr(open + 1, close - open - 1)), line});
  }
  return out;
}

std::vector<PersonaRule> load_persona_rules(const std::filesystem::path& path) {
  std::vector<PersonaRule> out;
  for (const auto& line : require_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ValidationError("persona line without a tab: " + line);
    const std::string source = line.substr(0, tab);
    try {
      out.push_back(PersonaRule{std::regex(source, std::regex::ECMAScript | std::regex::icase), source,
                                std::string(trim(std::string_view(line).substr(tab + 1)))});
    } catch (const std::regex_error& e) {
      throw ValidationError("bad persona regex '" + source + "': " + e.what());
    }
  }
  return out;
}

std::optional<std::string> match_persona(const std::vector<PersonaRule>& rules, std::string_view message) {
  const std::string msg(message);
  for (const auto& r : rules) {
    if (std::regex_search(msg, r.pattern)) return r.answer;
  }
  return std::nullopt;
}

std::shared_ptr<const ResponderPack> ResponderPack::load(const std::filesystem::path& data_dir,
                                                         std::shared_ptr<const text::TextResources> text,
                                                         const std::filesystem::path& topic_model_file) {
  if (!text) throw ValidationError("responder pack needs text resources");
  auto pack = std::make_shared<ResponderPack>();
  pack->text = text;
  if (!topic_model_file.empty()) {
    pack->topic_model = std::make_shared<const TopicModel>(TopicModel::load(topic_model_file));
  } else {
    auto model = std::make_shared<TopicModel>();
    model->train(load_topic_corpus(data_dir / "topics" / "train.tsv"), TopicTrainConfig{});
    pack->topic_model = std::move(model);
  }
  const auto topic_templates = data_dir / "topics" / "templates.txt";
  pack->topic_templates = require_slot(require_lines(topic_templates), kTopicSlot, topic_templates);
  const auto fact_templates = data_dir / "facts" / "templates.txt";
  const auto fact_prefixes = data_dir / "facts" / "prefixes.txt";
  pack->facts = std::make_shared<const FactBase>(
      FactBase::build(require_lines(data_dir / "facts" / "facts.txt"),
                      require_slot(require_lines(fact_templates), kFactSlot, fact_templates),
                      require_slot(require_lines(fact_prefixes), kFactSentenceSlot, fact_prefixes),
                      text->embeddings));
  pack->entity_templates = load_entity_templates(data_dir / "entities" / "templates.txt");
  pack->persona = load_persona_rules(data_dir / "persona.tsv");
  pack->rules = load_rules(data_dir / "rules.txt");
  pack->social_lines = require_lines(data_dir / "social.txt");
  return pack;
}

// ---------------------------------------------------------------- Topic

TopicResponder::TopicResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed)
    : pack_(std::move(pack)), rng_(seed) {}

void TopicResponder::wake_up(const Article& article) {
  topic_.reset();
  pending_ = {};
  auto model = pack_->topic_model;
  if (!model) return;
  auto text = article.text;
  if (pack_->async_topic_classification) {
    pending_ = std::async(std::launch::async, [model, text] { return model->classify(text); }).share();
  } else {
    topic_ = std::string(model->classify(text).label_name());
  }
}

std::optional<std::string> TopicResponder::topic() {
  if (!topic_ && pending_.valid() && pending_.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
    topic_ = std::string(pending_.get().label_name());
  }
  return topic_;
}

std::string TopicResponder::render(std::size_t template_index) const {
  if (!topic_) throw ProtocolError("topic not yet classified");
  return render_topic(pack_->topic_templates.at(template_index), *topic_);
}

std::string render_topic(std::string_view sentence_template, std::string_view topic) {
  return replace_all(std::string(sentence_template), kTopicSlot, topic);
}

std::optional<std::string> TopicResponder::respond(const ConversationState&) {
  if (!topic()) return std::nullopt;
  return render(pick(rng_, pack_->topic_templates.size()));
}

// ---------------------------------------------------------------- Fact

FactResponder::FactResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed)
    : pack_(std::move(pack)), rng_(seed) {}

void FactResponder::wake_up(const Article&) { used_.clear(); }

std::optional<std::size_t> FactResponder::peek(const ConversationState& state) const {
  const auto words = history_words(state);
  return pack_->facts->nearest(text::avg_embedding(words, pack_->text->embeddings), used_);
}

std::optional<std::string> FactResponder::respond(const ConversationState& state) {
  const auto idx = peek(state);
  if (!idx) return std::nullopt;
  used_.insert(*idx);
  const auto& base = *pack_->facts;
  const auto& fact = base.facts[*idx];
  const auto& tmpl = base.templates[pick(rng_, base.templates.size())];
  std::string sentence =
      replace_all(tmpl, kFactSlot, tmpl.starts_with(kFactSlot) ? fact : inline_fact(fact, pack_->text->lexicons));
  if (asks_question(state, pack_->text->lexicons)) {
    const auto& prefix = base.question_prefixes[pick(rng_, base.question_prefixes.size())];
    sentence = replace_all(prefix, kFactSentenceSlot, sentence);
  }
  return sentence;
}

// ---------------------------------------------------------------- Entity

EntityResponder::EntityResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed)
    : pack_(std::move(pack)), rng_(seed) {}

void EntityResponder::wake_up(const Article& article) {
  entities_.clear();
  used_templates_.clear();
  said_.clear();
  std::set<std::pair<text::EntityKind, std::string>> seen;
  for (auto& tag : pack_->text->tagger.tag(article.text)) {
    if (seen.emplace(tag.kind, tag.surface).second) entities_.push_back(std::move(tag));
  }
}

std::optional<std::string> EntityResponder::respond(const ConversationState&) {
  struct Option {
    std::size_t template_index;
    std::string text;
  };
  std::vector<Option> options;
  const auto& templates = pack_->entity_templates;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    if (used_templates_.contains(t)) continue;
    const std::string slot = "{" + std::string(text::to_string(templates[t].kind)) + "}";
    for (const auto& e : entities_) {
      if (e.kind != templates[t].kind) continue;
      auto rendered = replace_all(templates[t].text, slot, e.surface);
      if (!said_.contains(rendered)) options.push_back(Option{t, std::move(rendered)});
    }
  }
  if (options.empty()) return std::nullopt;
  auto& chosen = options[pick(rng_, options.size())];
  used_templates_.insert(chosen.template_index);
  said_.insert(chosen.text);
  return std::move(chosen.text);
}

// ---------------------------------------------------------------- Simple answers and patterns

SimpleAnswersResponder::SimpleAnswersResponder(std::shared_ptr<const ResponderPack> pack) : pack_(std::move(pack)) {}

std::optional<std::string> SimpleAnswersResponder::respond(const ConversationState& state) {
  const Message* m = state.last_human();
  if (m == nullptr) return std::nullopt;
  return match_persona(pack_->persona, m->text);
}

PatternResponder::PatternResponder(std::shared_ptr<const ResponderPack> pack)
    : engine_(std::make_shared<const PatternEngine>(pack->rules, pack->legacy_quote_suppression)) {}

std::optional<std::string> PatternResponder::respond(const ConversationState& state) {
  const Message* m = state.last_human();
  if (m == nullptr) return std::nullopt;
  return engine_->respond(m->text);
}

// ---------------------------------------------------------------- Stubs

SocialStub::SocialStub(std::shared_ptr<const ResponderPack> pack, ResponderKind kind, std::uint64_t seed)
    : pack_(std::move(pack)), kind_(kind), rng_(seed) {}

std::optional<std::string> SocialStub::respond(const ConversationState& state) {
  if (state.last_human() == nullptr) return std::nullopt;
  const auto& lines = pack_->social_lines;
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!used_.contains(i)) open.push_back(i);
  }
  if (open.empty()) return std::nullopt;
  const auto idx = open[pick(rng_, open.size())];
  used_.insert(idx);
  return lines[idx];
}

std::optional<std::string> EchoStub::respond(const ConversationState& state) {
  const Message* m = state.last_human();
  if (m == nullptr) return std::nullopt;
  return m->text;
}

QuestionGenStub::QuestionGenStub(std::uint64_t seed) : rng_(seed) {}

void QuestionGenStub::wake_up(const Article& article) {
  questions_.clear();
  asked_.clear();
  for (const auto& raw : article.sentences) {
    std::string s(trim(raw));
    while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
    if (s.empty()) continue;
    const auto spans = text::tokenize_spans(s);
    std::string question;
    // Front the first copula: "X is Y" becomes "Is x Y?".
    for (std::size_t i = 1; i < spans.size() && i < 8; ++i) {
      const auto w = text::to_lower(spans[i].text);
      if (w == "is" || w == "are" || w == "was" || w == "were") {
        std::string subject = s.substr(0, spans[i].begin);
        const bool proper = spans[0].text.size() > 1 && std::isupper(static_cast<unsigned char>(spans[0].text[1]));
        if (!proper && !subject.empty()) subject[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(subject[0])));
        std::string aux = w;
        aux[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(aux[0])));
        question = aux + " " + std::string(trim(subject)) + " " + std::string(trim(s.substr(spans[i].end))) + "?";
        break;
      }
    }
    if (question.empty()) question = "Did you know that " + s + "?";
    questions_.push_back(std::move(question));
  }
}

std::optional<std::string> QuestionGenStub::respond(const ConversationState&) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    if (!asked_.contains(i)) open.push_back(i);
  }
  if (open.empty()) return std::nullopt;
  const auto idx = open[pick(rng_, open.size())];
  asked_.insert(idx);
  return questions_[idx];
}

ExtractiveQaStub::ExtractiveQaStub(std::shared_ptr<const text::TextResources> text) : text_(std::move(text)) {}

void ExtractiveQaStub::wake_up(const Article& article) { sentences_ = article.sentences; }

std::optional<std::string> ExtractiveQaStub::respond(const ConversationState& state) {
  const Message* m = state.last_human();
  if (m == nullptr) return std::nullopt;
  const auto query = content_words(m->text, text_->lexicons);
  std::size_t best_overlap = 0;
  std::optional<std::string> best;
  for (const auto& s : sentences_) {
    const auto words = content_words(s, text_->lexicons);
    std::size_t overlap = 0;
    for (const auto& w : words) overlap += query.contains(w) ? 1 : 0;
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = s;
    }
  }
  return best;
}

// ---------------------------------------------------------------- factory

ResponderFactory make_builtin_factory(ResponderKind kind, std::shared_ptr<const ResponderPack> pack) {
  if (!pack) throw ValidationError("builtin responders need a pack");
  return [kind, pack](const std::string&, std::uint64_t seed) -> std::unique_ptr<Responder> {
    switch (kind) {
      case ResponderKind::kHredTwitter:
        return std::make_unique<SocialStub>(pack, kind, seed);
      case ResponderKind::kHredReddit:
        return std::make_unique<EchoStub>(kind);
      case ResponderKind::kQuestionGen:
        return std::make_unique<QuestionGenStub>(seed);
      case ResponderKind::kQuestionAnswer:
        return std::make_unique<ExtractiveQaStub>(pack->text);
      case ResponderKind::kTopic:
        return std::make_unique<TopicResponder>(pack, seed);
      case ResponderKind::kFact:
        return std::make_unique<FactResponder>(pack, seed);
      case ResponderKind::kEntity:
        return std::make_unique<EntityResponder>(pack, seed);
      case ResponderKind::kSimpleAnswers:
        return std::make_unique<SimpleAnswersResponder>(pack);
      case ResponderKind::kPattern:
        return std::make_unique<PatternResponder>(pack);
    }
    throw ValidationError("unknown responder kind");
  };
}

}  // namespace chorus::responders
