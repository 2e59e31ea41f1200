#pragma once

#include <atomic>
#include <stdexcept>
#include <vector>

#include "clauseforge/crf.hpp"
#include "clauseforge/grammar.hpp"
#include "clauseforge/restructure.hpp"

namespace clauseforge {

struct EnsembleConfig {
  const RuleSet* rules = nullptr;        // grammar stage; optional
  const TaggerModel* model = nullptr;    // fallback stage; optional
  const SyntaxProvider* syntax = &default_syntax_provider();
  bool expansion_enabled = true;
};

// One sentence through the pipeline. Span coordinates refer to the expanded
// utterance; the trace lets callers project back to the original text.
struct SentenceResult {
  AnnotationSet annotations;
  ExpansionTrace trace;
};

struct EnsembleResult {
  std::vector<SentenceResult> sentences;
};

// Split on sentence-final punctuation; each piece keeps its own token
// indexing. A piece with no terminal punctuation is still a sentence.
inline std::vector<Utterance> segment_sentences(const Utterance& u) {
  std::vector<Utterance> out;
  std::vector<std::string> current;
  for (const auto& t : u.tokens) {
    current.push_back(t.surface);
    if (t.surface == "." || t.surface == "!" || t.surface == "?") {
      out.push_back(detail::join_tokens(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(detail::join_tokens(current));
  return out;
}

// Grammar-first pipeline: restructure, try the ordered rules, fall back to
// the tagger when no rule fires.
class Ensemble {
 public:
  explicit Ensemble(EnsembleConfig config) : cfg_(config) {
    if (!cfg_.rules && !cfg_.model)
      throw std::invalid_argument("ensemble needs a rule set or a model");
    if (!cfg_.syntax) cfg_.syntax = &default_syntax_provider();
  }

  SentenceResult run_sentence(const Utterance& sentence) const {
    SentenceResult res;
    if (cfg_.expansion_enabled) {
      res.trace = expand_clauses(sentence, *cfg_.syntax);
    } else {
      res.trace.original = sentence;
      res.trace.expanded = sentence;
    }
    const Utterance& text = res.trace.expanded;

    if (cfg_.rules) {
      if (auto match = grammar_match(text, *cfg_.rules)) {
        res.annotations = std::move(*match);
        return res;
      }
    }
    res.annotations.utterance = text;
    res.annotations.provenance = Provenance::MODEL;
    if (cfg_.model && !text.tokens.empty()) {
      ++tagger_calls_;
      auto decoded = decode(*cfg_.model, text);
      auto spans = from_bio(decoded.labels, text);
      res.annotations.spans = std::move(spans.spans);
      if (validate(res.annotations)) repair_spans(res.annotations.spans);
    }
    return res;
  }

  EnsembleResult run(const Utterance& utterance) const {
    EnsembleResult out;
    for (const auto& s : segment_sentences(utterance))
      out.sentences.push_back(run_sentence(s));
    return out;
  }

  std::size_t tagger_invocations() const { return tagger_calls_.load(); }

 private:
  EnsembleConfig cfg_;
  mutable std::atomic<std::size_t> tagger_calls_{0};
};

}  // namespace clauseforge
