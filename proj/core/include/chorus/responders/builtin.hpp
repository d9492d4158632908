#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <future>
#include <memory>
#include <optional>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "chorus/responders/pattern_engine.hpp"
#include "chorus/responders/responder.hpp"
#include "chorus/responders/topic_model.hpp"
#include "chorus/text/resources.hpp"

namespace chorus::responders {

/// Facts with their averaged embeddings, plus the sentence forms used to present them.
struct FactBase {
  std::vector<std::string> facts;
  Eigen::MatrixXd matrix;  // one row per fact, computed at load
  std::vector<std::string> templates;  // contain "<fact>"
  std::vector<std::string> question_prefixes;  // contain "<fact sentence>"

  static FactBase build(std::vector<std::string> facts, std::vector<std::string> templates,
                        std::vector<std::string> prefixes, const text::EmbeddingStore& store);

  /// Index of the unused fact nearest (by cosine distance) to `conversation`;
  /// ties go to the lowest index. nullopt when every fact is used.
  std::optional<std::size_t> nearest(const Eigen::VectorXd& conversation, const std::set<std::size_t>& used) const;
};

struct EntityTemplate {
  text::EntityKind kind = text::EntityKind::kPerson;
  std::string text;  // contains "{kind}" placeholder, e.g. "{norp}"
};

/// Reads one template per line; the kind is taken from the "{...}" placeholder.
std::vector<EntityTemplate> load_entity_templates(const std::filesystem::path& path);

struct PersonaRule {
  std::regex pattern;
  std::string source;
  std::string answer;
};

/// Reads "regex<TAB>answer" lines; patterns are case-insensitive.
std::vector<PersonaRule> load_persona_rules(const std::filesystem::path& path);
/// First persona answer whose pattern occurs in `message`.
std::optional<std::string> match_persona(const std::vector<PersonaRule>& rules, std::string_view message);

/// Everything the built-in responders read. Immutable once loaded.
struct ResponderPack {
  std::shared_ptr<const text::TextResources> text;
  std::shared_ptr<const TopicModel> topic_model;
  std::vector<std::string> topic_templates;  // contain "<topic>"
  std::shared_ptr<const FactBase> facts;
  std::vector<EntityTemplate> entity_templates;
  std::vector<PersonaRule> persona;
  std::vector<PatternRule> rules;
  std::vector<std::string> social_lines;
  bool legacy_quote_suppression = false;
  bool async_topic_classification = false;

  /// Loads every pack file from `data_dir`. The topic model is loaded from
  /// `topic_model_file` when given, otherwise trained on `<data_dir>/topics/train.tsv`.
  static std::shared_ptr<const ResponderPack> load(const std::filesystem::path& data_dir,
                                                   std::shared_ptr<const text::TextResources> text,
                                                   const std::filesystem::path& topic_model_file = {});
};

/// Fills the "<topic>" slot of a topic sentence.
std::string render_topic(std::string_view sentence_template, std::string_view topic);

/// Factory for the in-process implementation of `kind`.
ResponderFactory make_builtin_factory(ResponderKind kind, std::shared_ptr<const ResponderPack> pack);

// Concrete responders. Exposed for direct testing.

class TopicResponder : public Responder {
 public:
  TopicResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed);
  ResponderKind kind() const override { return ResponderKind::kTopic; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

  /// The topic once classification has finished; never set without a topic model.
  std::optional<std::string> topic();
  std::string render(std::size_t template_index) const;

 private:
  std::shared_ptr<const ResponderPack> pack_;
  std::mt19937_64 rng_;
  std::shared_future<TopicPrediction> pending_;
  std::optional<std::string> topic_;
};

class FactResponder : public Responder {
 public:
  FactResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed);
  ResponderKind kind() const override { return ResponderKind::kFact; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

  /// The raw fact chosen for `state`, without marking it used.
  std::optional<std::size_t> peek(const ConversationState& state) const;
  const std::set<std::size_t>& used() const { return used_; }

 private:
  std::shared_ptr<const ResponderPack> pack_;
  std::mt19937_64 rng_;
  std::set<std::size_t> used_;
};

class EntityResponder : public Responder {
 public:
  EntityResponder(std::shared_ptr<const ResponderPack> pack, std::uint64_t seed);
  ResponderKind kind() const override { return ResponderKind::kEntity; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

  const std::vector<text::EntityTag>& entities() const { return entities_; }

 private:
  std::shared_ptr<const ResponderPack> pack_;
  std::mt19937_64 rng_;
  std::vector<text::EntityTag> entities_;
  std::set<std::size_t> used_templates_;
  std::set<std::string> said_;
};

class SimpleAnswersResponder : public Responder {
 public:
  explicit SimpleAnswersResponder(std::shared_ptr<const ResponderPack> pack);
  ResponderKind kind() const override { return ResponderKind::kSimpleAnswers; }
  void wake_up(const Article&) override {}
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  std::shared_ptr<const ResponderPack> pack_;
};

class PatternResponder : public Responder {
 public:
  explicit PatternResponder(std::shared_ptr<const ResponderPack> pack);
  ResponderKind kind() const override { return ResponderKind::kPattern; }
  void wake_up(const Article&) override {}
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  std::shared_ptr<const PatternEngine> engine_;
};

/// Stand-in for a chit-chat generator: returns an unused line from a canned pool.
class SocialStub : public Responder {
 public:
  SocialStub(std::shared_ptr<const ResponderPack> pack, ResponderKind kind, std::uint64_t seed);
  ResponderKind kind() const override { return kind_; }
  void wake_up(const Article&) override {}
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  std::shared_ptr<const ResponderPack> pack_;
  ResponderKind kind_;
  std::mt19937_64 rng_;
  std::set<std::size_t> used_;
};

/// Stand-in that repeats the last user message verbatim.
class EchoStub : public Responder {
 public:
  explicit EchoStub(ResponderKind kind) : kind_(kind) {}
  ResponderKind kind() const override { return kind_; }
  void wake_up(const Article&) override {}
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  ResponderKind kind_;
};

/// Stand-in for the question generator: turns article sentences into
/// questions at wake-up and asks a random one not asked before.
class QuestionGenStub : public Responder {
 public:
  explicit QuestionGenStub(std::uint64_t seed);
  ResponderKind kind() const override { return ResponderKind::kQuestionGen; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

  const std::vector<std::string>& questions() const { return questions_; }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> questions_;
  std::set<std::size_t> asked_;
};

/// Stand-in for extractive QA: answers with the article sentence sharing the
/// most non-stop-words with the last user message (earliest on ties).
class ExtractiveQaStub : public Responder {
 public:
  explicit ExtractiveQaStub(std::shared_ptr<const text::TextResources> text);
  ResponderKind kind() const override { return ResponderKind::kQuestionAnswer; }
  void wake_up(const Article& article) override;
  std::optional<std::string> respond(const ConversationState& state) override;

 private:
  std::shared_ptr<const text::TextResources> text_;
  std::vector<std::string> sentences_;
};

}  // namespace chorus::responders
