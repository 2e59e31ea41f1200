#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clauseforge/tags.hpp"
#include "clauseforge/token.hpp"

namespace clauseforge {

struct SpanAnnotation {
  TagType tag = TagType::NN;
  std::size_t token_start = 0;  // inclusive
  std::size_t token_end = 0;    // exclusive

  bool operator==(const SpanAnnotation&) const = default;
};

enum class Provenance { GOLD, GRAMMAR, MODEL };

inline std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::GOLD: return "GOLD";
    case Provenance::GRAMMAR: return "GRAMMAR";
    case Provenance::MODEL: return "MODEL";
  }
  return "?";
}

struct AnnotationSet {
  Utterance utterance;
  std::vector<SpanAnnotation> spans;
  Provenance provenance = Provenance::GOLD;

  bool operator==(const AnnotationSet& o) const {
    return utterance == o.utterance && spans == o.spans;
  }
};

inline void sort_spans(std::vector<SpanAnnotation>& spans) {
  std::stable_sort(spans.begin(), spans.end(),
                   [](const SpanAnnotation& a, const SpanAnnotation& b) {
                     return a.token_start < b.token_start;
                   });
}

// Returns an error message, or nullopt when the set is well formed.
// Checks: span bounds, non-overlap, at most one span per tag, and the
// ordering dependencies (SA needs FA, TA needs SA).
inline std::optional<std::string> validate(const AnnotationSet& a) {
  const std::size_t n = a.utterance.tokens.size();
  int per_tag[7] = {0};
  for (const auto& s : a.spans) {
    if (s.token_start >= s.token_end || s.token_end > n)
      return "span out of range: " + std::string(tag_name(s.tag)) + " [" +
             std::to_string(s.token_start) + "," + std::to_string(s.token_end) +
             ") over " + std::to_string(n) + " tokens";
    if (s.tag == TagType::NN)
      return "NN is not a span tag";
    per_tag[static_cast<int>(s.tag)]++;
  }
  auto sorted = a.spans;
  sort_spans(sorted);
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].token_start < sorted[i - 1].token_end)
      return "overlapping spans: " + std::string(tag_name(sorted[i - 1].tag)) +
             " [" + std::to_string(sorted[i - 1].token_start) + "," +
             std::to_string(sorted[i - 1].token_end) + ") and " +
             std::string(tag_name(sorted[i].tag)) + " [" +
             std::to_string(sorted[i].token_start) + "," +
             std::to_string(sorted[i].token_end) + ")";
  }
  for (TagType t : kSpanTags) {
    if (per_tag[static_cast<int>(t)] > 1)
      return "more than one " + std::string(tag_name(t)) + " span";
  }
  auto has = [&](TagType t) { return per_tag[static_cast<int>(t)] > 0; };
  if (has(TagType::SA) && !has(TagType::FA)) return "SA without FA";
  if (has(TagType::TA) && !has(TagType::SA)) return "TA without SA";
  return std::nullopt;
}

// Best-effort repair for decoded model output: keep the first span of each
// tag, then enforce the FA->SA->TA dependency chain by dropping orphans.
inline void repair_spans(std::vector<SpanAnnotation>& spans) {
  sort_spans(spans);
  bool seen[7] = {false};
  std::vector<SpanAnnotation> kept;
  for (const auto& s : spans) {
    if (seen[static_cast<int>(s.tag)]) continue;
    seen[static_cast<int>(s.tag)] = true;
    kept.push_back(s);
  }
  auto drop = [&](TagType t) {
    std::erase_if(kept, [&](const SpanAnnotation& s) { return s.tag == t; });
    seen[static_cast<int>(t)] = false;
  };
  if (seen[static_cast<int>(TagType::SA)] && !seen[static_cast<int>(TagType::FA)])
    drop(TagType::SA);
  if (seen[static_cast<int>(TagType::TA)] && !seen[static_cast<int>(TagType::SA)])
    drop(TagType::TA);
  spans = std::move(kept);
}

// BIO encoding: B-<tag> at span starts, I-<tag> inside, O elsewhere.
// NN sentences carry no spans, so they come out all O.
inline std::vector<BioLabel> to_bio(const AnnotationSet& a) {
  if (auto err = validate(a)) throw std::invalid_argument("to_bio: " + *err);
  std::vector<BioLabel> labels(a.utterance.tokens.size());
  for (const auto& s : a.spans) {
    labels[s.token_start] = {BioLabel::B, s.tag};
    for (std::size_t i = s.token_start + 1; i < s.token_end; ++i)
      labels[i] = {BioLabel::I, s.tag};
  }
  return labels;
}

// Decode a BIO sequence into spans. An orphan I- (no preceding B-/I- of the
// same tag) is repaired by treating it as B-.
inline AnnotationSet from_bio(const std::vector<BioLabel>& labels,
                              Utterance utterance) {
  if (labels.size() != utterance.tokens.size())
    throw std::invalid_argument(
        "from_bio: " + std::to_string(labels.size()) + " labels for " +
        std::to_string(utterance.tokens.size()) + " tokens");
  AnnotationSet out;
  out.utterance = std::move(utterance);
  std::optional<SpanAnnotation> open;
  auto close = [&] {
    if (open) { out.spans.push_back(*open); open.reset(); }
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const BioLabel& l = labels[i];
    if (l.kind == BioLabel::O) {
      close();
    } else if (l.kind == BioLabel::B || !open || open->tag != l.tag) {
      close();
      open = SpanAnnotation{l.tag, i, i + 1};
    } else {
      open->token_end = i + 1;
    }
  }
  close();
  return out;
}

}  // namespace clauseforge
