#pragma once

#include <string>
#include <vector>

#include "clauseforge/syntax.hpp"
#include "clauseforge/token.hpp"

namespace clauseforge {

// One copied predicate prefix: tokens [src_begin, src_end) of the original
// utterance, re-inserted after original token index insert_after.
struct CopiedSegment {
  std::size_t src_begin = 0;
  std::size_t src_end = 0;
  std::size_t insert_after = 0;

  bool operator==(const CopiedSegment&) const = default;
};

struct ExpansionTrace {
  Utterance original;
  Utterance expanded;
  std::vector<CopiedSegment> copied_segments;

  bool changed() const { return !copied_segments.empty(); }
};

namespace detail {

inline bool is_clause_boundary_token(const std::string& lower) {
  if (lower.size() == 1 && is_detachable_punct(lower[0])) return true;
  return lower == "if" || lower == "unless" || lower == "then" ||
         lower == "else" || lower == "otherwise" || lower == "while" ||
         lower == "when";
}

inline bool is_quote_or_paren(char c) {
  return c == '"' || c == '\'' || c == '(' || c == ')';
}

// Rebuild text from a token surface list: single spaces, none before
// detached punctuation.
inline Utterance join_tokens(const std::vector<std::string>& words) {
  Utterance u;
  for (std::size_t i = 0; i < words.size(); ++i) {
    bool punct = words[i].size() == 1 && is_detachable_punct(words[i][0]);
    if (i > 0 && !punct) u.text += ' ';
    std::size_t start = u.text.size();
    u.text += words[i];
    u.tokens.push_back({words[i], start, u.text.size()});
  }
  return u;
}

}  // namespace detail

// Gapping reconstruction: at each coordination site whose right conjunct has
// no VERB-like token before the next clause boundary, copy the predicate
// prefix of the left clause after the conjunction. Never fails; worst case
// is identity.
inline ExpansionTrace expand_clauses(const Utterance& u, const SyntaxHints& hints) {
  ExpansionTrace trace;
  trace.original = u;
  const std::size_t n = u.tokens.size();

  std::vector<std::string> lowered(n);
  for (std::size_t i = 0; i < n; ++i) lowered[i] = lowercase(u.tokens[i].surface);

  // quote/paren depth per token; conjunctions inside are left alone
  std::vector<int> depth(n, 0);
  {
    int d = 0;
    bool in_quote = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& s = u.tokens[i].surface;
      if (s == "(") { ++d; depth[i] = d; continue; }
      if (s == ")") { depth[i] = d; if (d > 0) --d; continue; }
      if (s == "\"") { in_quote = !in_quote; depth[i] = d + 1; continue; }
      depth[i] = d + (in_quote ? 1 : 0);
    }
  }

  for (std::size_t c : hints.coordination_sites) {
    if (c >= n || depth[c] > 0) continue;

    // right conjunct: tokens up to the next clause boundary or site
    std::size_t rend = c + 1;
    bool has_verb = false;
    while (rend < n && !detail::is_clause_boundary_token(lowered[rend]) &&
           lowered[rend] != "and" && lowered[rend] != "or") {
      if (hints.categories[rend] == WordCategory::VERB_LIKE) has_verb = true;
      ++rend;
    }
    if (has_verb || rend == c + 1) continue;

    // left conjunct group: nominal run (with its determiners/possessives)
    // directly before the conjunction
    static const std::set<std::string> determiners = {
        "the", "a", "an", "my", "your", "his", "her", "their", "our", "its",
        "this", "that"};
    std::size_t g = c;
    while (g > 0) {
      WordCategory cat = hints.categories[g - 1];
      if (cat == WordCategory::NOUN_LIKE || cat == WordCategory::NUMBER ||
          cat == WordCategory::OTHER || determiners.count(lowered[g - 1])) {
        --g;
      } else {
        break;
      }
    }
    if (g == 0 || g == c) continue;

    // predicate prefix: from the clause start up to the left conjunct group;
    // it must actually contain a verb to be worth copying
    std::size_t clause_start = g;
    while (clause_start > 0 &&
           !detail::is_clause_boundary_token(lowered[clause_start - 1]))
      --clause_start;
    bool prefix_verb = false;
    for (std::size_t i = clause_start; i < g; ++i)
      if (hints.categories[i] == WordCategory::VERB_LIKE) prefix_verb = true;
    if (!prefix_verb) continue;

    trace.copied_segments.push_back({clause_start, g, c});
  }

  if (trace.copied_segments.empty()) {
    trace.expanded = u;
    return trace;
  }

  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(u.tokens[i].surface);
    for (const auto& seg : trace.copied_segments) {
      if (seg.insert_after == i)
        for (std::size_t k = seg.src_begin; k < seg.src_end; ++k)
          out.push_back(u.tokens[k].surface);
    }
  }
  trace.expanded = detail::join_tokens(out);
  return trace;
}

inline ExpansionTrace expand_clauses(const Utterance& u,
                                     const SyntaxProvider& provider =
                                         default_syntax_provider()) {
  return expand_clauses(u, provider.analyze(u));
}

// Drop the copied segments again; exact inverse of the expansion.
inline Utterance reconstruct_original(const ExpansionTrace& trace) {
  if (trace.copied_segments.empty()) return trace.expanded;
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t orig_index = 0;
  const auto& toks = trace.expanded.tokens;
  while (pos < toks.size()) {
    out.push_back(toks[pos].surface);
    std::size_t skip = 0;
    for (const auto& seg : trace.copied_segments)
      if (seg.insert_after == orig_index) skip += seg.src_end - seg.src_begin;
    pos += 1 + skip;
    ++orig_index;
  }
  return detail::join_tokens(out);
}

}  // namespace clauseforge
