#include <catch2/catch_amalgamated.hpp>

#include "clauseforge/ensemble.hpp"
#include "support/synthetic_candle.hpp"

using namespace clauseforge;

namespace {

std::string span_text(const AnnotationSet& a, TagType t) {
  for (const auto& s : a.spans) {
    if (s.tag != t) continue;
    const auto& toks = a.utterance.tokens;
    return a.utterance.text.substr(
        toks[s.token_start].start,
        toks[s.token_end - 1].end - toks[s.token_start].start);
  }
  return "<none>";
}

TaggerModel& shared_model() {
  static TaggerModel model = [] {
    Corpus train;
    train.examples = synth::make_split(Split::TRAIN);
    // short training run: plenty for the routing tests here
    TrainingConfig cfg;
    cfg.epochs = 4;
    return clauseforge::train(train, cfg);
  }();
  return model;
}

}  // namespace

TEST_CASE("ensemble requires at least one resource") {
  REQUIRE_THROWS_AS(Ensemble(EnsembleConfig{}), std::invalid_argument);
}

TEST_CASE("grammar path wins and the tagger is never invoked") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  cfg.model = &shared_model();
  Ensemble ens(cfg);
  auto res = ens.run_sentence(tokenize(
      "Provided that I have at least 1000 bucks in my account, please "
      "transfer $400 to Donald otherwise check my account balance"));
  REQUIRE(res.annotations.provenance == Provenance::GRAMMAR);
  REQUIRE(span_text(res.annotations, TagType::CND) ==
          "I have at least 1000 bucks in my account");
  REQUIRE(span_text(res.annotations, TagType::CSQ) ==
          "please transfer $400 to Donald");
  REQUIRE(span_text(res.annotations, TagType::ALT) == "check my account balance");
  REQUIRE(ens.tagger_invocations() == 0);
}

TEST_CASE("with an empty ruleset every sentence takes the model path") {
  RuleSet empty;
  EnsembleConfig cfg;
  cfg.rules = &empty;
  cfg.model = &shared_model();
  Ensemble ens(cfg);
  auto res = ens.run_sentence(tokenize("if it rains, stay home."));
  REQUIRE(res.annotations.provenance == Provenance::MODEL);
  REQUIRE(ens.tagger_invocations() == 1);
}

TEST_CASE("multi-sentence input is segmented and processed per sentence") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  Ensemble ens(cfg);
  auto out = ens.run(tokenize(
      "As long as it's not raining, don't buy me a raincoat. It's cold "
      "outside."));
  REQUIRE(out.sentences.size() == 2);
  REQUIRE(span_text(out.sentences[0].annotations, TagType::CND) ==
          "it's not raining");
  REQUIRE(span_text(out.sentences[0].annotations, TagType::CSQ) ==
          "don't buy me a raincoat");
  REQUIRE(out.sentences[1].annotations.spans.empty());
}

TEST_CASE("expansion feeds the grammar stage") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  Ensemble ens(cfg);
  auto res = ens.run_sentence(tokenize("Transfer $400 to John and Sam."));
  REQUIRE(res.trace.changed());
  REQUIRE(res.annotations.utterance.text ==
          "Transfer $400 to John and Transfer $400 to Sam.");
  REQUIRE(span_text(res.annotations, TagType::FA) == "Transfer $400 to John");
  REQUIRE(span_text(res.annotations, TagType::SA) == "Transfer $400 to Sam");
}

TEST_CASE("disabling expansion isolates the raw utterance path") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  cfg.expansion_enabled = false;
  Ensemble ens(cfg);
  auto u = tokenize("Transfer $400 to John and Sam.");
  auto res = ens.run_sentence(u);
  REQUIRE(!res.trace.changed());
  auto direct = grammar_match(u, default_rules());
  if (direct) {
    REQUIRE(res.annotations.spans == direct->spans);
  } else {
    REQUIRE(res.annotations.spans.empty());
  }
}

TEST_CASE("ensemble output always satisfies the annotation invariants") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  cfg.model = &shared_model();
  Ensemble ens(cfg);
  auto test = synth::make_split(Split::TEST);
  for (std::size_t i = 0; i < 60; ++i) {
    auto res = ens.run_sentence(test[i].utterance);
    REQUIRE(!validate(res.annotations).has_value());
  }
}

TEST_CASE("model fallback fires exactly when grammar misses") {
  EnsembleConfig cfg;
  cfg.rules = &default_rules();
  cfg.model = &shared_model();
  Ensemble ens(cfg);
  auto before = ens.tagger_invocations();
  ens.run_sentence(tokenize("if it rains, stay home."));  // grammar hit
  REQUIRE(ens.tagger_invocations() == before);
  ens.run_sentence(tokenize("My phone keeps dropping calls."));  // miss
  REQUIRE(ens.tagger_invocations() == before + 1);
}
