#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clauseforge/annotation.hpp"
#include "clauseforge/markers.hpp"

namespace clauseforge {

// Pattern element of the rule DSL. Patterns are whitespace-separated:
//   literal word        matched case-insensitively
//   {capture:name}      lazy wildcard over >= 1 token, annotated via `tag`
//   {capture:name:plain}  as above but may not absorb clause delimiters
//   {skip}              lazy wildcard over >= 1 token, not annotated
//   [ ... ]             optional group
struct PatternElement {
  enum Kind { LITERAL, CAPTURE, SKIP, OPTIONAL } kind = LITERAL;
  std::string literal;       // lowercased, LITERAL only
  std::string capture_name;  // CAPTURE only
  bool plain = false;        // CAPTURE only
  std::vector<PatternElement> group;  // OPTIONAL only
};

struct RuleTemplate {
  std::string id;
  int priority = 0;  // lower fires first
  std::vector<PatternElement> pattern;
  std::map<std::string, TagType> captures;
  std::string pattern_source;
};

struct RuleSet {
  std::vector<RuleTemplate> rules;  // sorted by priority
  std::vector<std::string> markers = marker_lexicon();
};

struct RuleCompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<PatternElement> parse_pattern(const std::string& src,
                                                 const std::string& rule_id) {
  std::vector<PatternElement> out;
  std::vector<std::vector<PatternElement>*> stack = {&out};
  std::istringstream ss(src);
  std::string tok;
  while (ss >> tok) {
    if (tok == "[") {
      stack.back()->push_back({PatternElement::OPTIONAL});
      stack.push_back(&stack.back()->back().group);
    } else if (tok == "]") {
      if (stack.size() < 2)
        throw RuleCompileError("rule " + rule_id + ": unmatched ']' in pattern");
      stack.pop_back();
    } else if (tok == "{skip}") {
      stack.back()->push_back({PatternElement::SKIP});
    } else if (tok.size() > 2 && tok.front() == '{' && tok.back() == '}') {
      std::string body = tok.substr(1, tok.size() - 2);
      if (body.rfind("capture:", 0) != 0)
        throw RuleCompileError("rule " + rule_id + ": malformed wildcard '" + tok + "'");
      PatternElement e{PatternElement::CAPTURE};
      std::string rest = body.substr(8);
      auto colon = rest.find(':');
      if (colon != std::string::npos) {
        if (rest.substr(colon + 1) != "plain")
          throw RuleCompileError("rule " + rule_id + ": unknown capture modifier in '" + tok + "'");
        e.plain = true;
        rest = rest.substr(0, colon);
      }
      if (rest.empty())
        throw RuleCompileError("rule " + rule_id + ": empty capture name");
      e.capture_name = rest;
      stack.back()->push_back(std::move(e));
    } else {
      if (tok.find('{') != std::string::npos || tok.find('}') != std::string::npos)
        throw RuleCompileError("rule " + rule_id + ": unmatched brace in '" + tok + "'");
      stack.back()->push_back({PatternElement::LITERAL, lowercase(tok)});
    }
  }
  if (stack.size() != 1)
    throw RuleCompileError("rule " + rule_id + ": unmatched '[' in pattern");
  if (out.empty())
    throw RuleCompileError("rule " + rule_id + ": empty pattern");
  return out;
}

// Tokens a plain capture may not absorb.
inline bool is_clause_delimiter(const std::string& lower) {
  static const std::set<std::string> delims = {
      ",", ";", "if", "unless", "provided", "otherwise", "else", "then",
      "and", "or"};
  return delims.count(lower) > 0;
}

struct MatchState {
  const std::vector<std::string>* lowered = nullptr;
  std::map<std::string, std::pair<std::size_t, std::size_t>>* captures = nullptr;
};

// Backtracking matcher; wildcards are lazy (shortest first), optional groups
// try the with-group branch first.
inline bool match_elems(const std::vector<const PatternElement*>& elems,
                        std::size_t ei, std::size_t pos, std::size_t end,
                        MatchState& st) {
  if (ei == elems.size()) return pos == end;
  const PatternElement& e = *elems[ei];
  switch (e.kind) {
    case PatternElement::LITERAL:
      return pos < end && (*st.lowered)[pos] == e.literal &&
             match_elems(elems, ei + 1, pos + 1, end, st);
    case PatternElement::OPTIONAL: {
      std::vector<const PatternElement*> with;
      for (const auto& g : e.group) with.push_back(&g);
      for (std::size_t k = ei + 1; k < elems.size(); ++k) with.push_back(elems[k]);
      std::vector<const PatternElement*> inner(with);
      if (match_elems(inner, 0, pos, end, st)) return true;
      return match_elems(elems, ei + 1, pos, end, st);
    }
    case PatternElement::CAPTURE:
    case PatternElement::SKIP: {
      for (std::size_t len = 1; pos + len <= end; ++len) {
        if (e.kind == PatternElement::CAPTURE && e.plain &&
            is_clause_delimiter((*st.lowered)[pos + len - 1]))
          break;
        if (e.kind == PatternElement::CAPTURE)
          (*st.captures)[e.capture_name] = {pos, pos + len};
        if (match_elems(elems, ei + 1, pos + len, end, st)) return true;
      }
      if (e.kind == PatternElement::CAPTURE) st.captures->erase(e.capture_name);
      return false;
    }
  }
  return false;
}

inline bool is_punct_token(const std::string& s) {
  return s.size() == 1 && is_detachable_punct(s[0]);
}

}  // namespace detail

inline RuleSet compile_rules(const std::string& text) {
  RuleSet rs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  RuleTemplate* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "rule") {
      RuleTemplate r;
      std::string prio_kw;
      char colon = 0;
      if (!(ls >> r.id >> prio_kw >> r.priority) || prio_kw != "priority")
        throw RuleCompileError("line " + std::to_string(lineno) +
                               ": expected 'rule <id> priority <n>: <pattern>'");
      ls >> colon;
      if (colon != ':')
        throw RuleCompileError("rule " + r.id + ": missing ':' before pattern");
      std::getline(ls, r.pattern_source);
      r.pattern = detail::parse_pattern(r.pattern_source, r.id);
      rs.rules.push_back(std::move(r));
      current = &rs.rules.back();
    } else if (kw == "tag") {
      if (!current)
        throw RuleCompileError("line " + std::to_string(lineno) +
                               ": 'tag' outside a rule block");
      std::string name, tag_str;
      if (!(ls >> name >> tag_str))
        throw RuleCompileError("rule " + current->id + ": expected 'tag <name> <TAG>'");
      auto t = parse_tag(tag_str);
      if (!t || *t == TagType::NN)
        throw RuleCompileError("rule " + current->id + ": capture '" + name +
                               "' mapped to unknown tag '" + tag_str + "'");
      current->captures[name] = *t;
    } else {
      throw RuleCompileError("line " + std::to_string(lineno) +
                             ": unknown directive '" + kw + "'");
    }
  }
  // cross-checks: unique ids/priorities, capture maps consistent with patterns
  std::set<int> prios;
  std::set<std::string> ids;
  for (const auto& r : rs.rules) {
    if (!prios.insert(r.priority).second)
      throw RuleCompileError("rule " + r.id + ": duplicate priority " +
                             std::to_string(r.priority));
    if (!ids.insert(r.id).second)
      throw RuleCompileError("duplicate rule id " + r.id);
    std::set<std::string> names;
    std::vector<const PatternElement*> todo;
    for (const auto& e : r.pattern) todo.push_back(&e);
    while (!todo.empty()) {
      const PatternElement* e = todo.back();
      todo.pop_back();
      if (e->kind == PatternElement::CAPTURE) names.insert(e->capture_name);
      for (const auto& g : e->group) todo.push_back(&g);
    }
    for (const auto& n : names)
      if (!r.captures.count(n))
        throw RuleCompileError("rule " + r.id + ": capture '" + n +
                               "' has no tag mapping");
    for (const auto& [n, t] : r.captures)
      if (!names.count(n))
        throw RuleCompileError("rule " + r.id + ": tag mapping for unknown capture '" +
                               n + "'");
  }
  std::sort(rs.rules.begin(), rs.rules.end(),
            [](const RuleTemplate& a, const RuleTemplate& b) {
              return a.priority < b.priority;
            });
  return rs;
}

// First-match-wins over the priority order. A rule whose captures fail
// annotation validation (e.g. empty span after trimming) is skipped.
inline std::optional<AnnotationSet> grammar_match(const Utterance& u,
                                                  const RuleSet& rs) {
  std::vector<std::string> lowered;
  lowered.reserve(u.tokens.size());
  for (const auto& t : u.tokens) lowered.push_back(lowercase(t.surface));
  // sentence-final punctuation does not participate in matching
  std::size_t end = lowered.size();
  while (end > 0 && detail::is_punct_token(u.tokens[end - 1].surface)) --end;
  if (end == 0) return std::nullopt;

  for (const auto& r : rs.rules) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> captures;
    detail::MatchState st{&lowered, &captures};
    std::vector<const PatternElement*> elems;
    for (const auto& e : r.pattern) elems.push_back(&e);
    if (!detail::match_elems(elems, 0, 0, end, st)) continue;

    AnnotationSet out;
    out.utterance = u;
    out.provenance = Provenance::GRAMMAR;
    bool ok = true;
    for (const auto& [name, range] : captures) {
      auto [b, e2] = range;
      // trim edge punctuation and marker words off the captured span
      while (b < e2 && (detail::is_punct_token(u.tokens[b].surface) ||
                        is_marker_word(lowered[b])))
        ++b;
      while (e2 > b && (detail::is_punct_token(u.tokens[e2 - 1].surface) ||
                        is_marker_word(lowered[e2 - 1])))
        --e2;
      if (b >= e2) { ok = false; break; }
      out.spans.push_back({r.captures.at(name), b, e2});
    }
    if (!ok || validate(out)) continue;
    sort_spans(out.spans);
    return out;
  }
  return std::nullopt;
}

// Shipped rule inventory. Conditional rules cover the marker lexicon in both
// clause orders; sequence rules cover 2- and 3-way chains but never emit TA.
inline const std::string& default_rules_text() {
  static const std::string text = R"(# default grammar rules
# three-part conditionals (condition / consequence / alternative)
rule if_then_else priority 10 : if {capture:cond} [ , ] then {capture:act} [ , ] else {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule if_then_otherwise priority 11 : if {capture:cond} [ , ] then {capture:act} [ , ] otherwise {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule if_else priority 12 : if {capture:cond} , {capture:act} [ , ] else {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule if_otherwise priority 14 : if {capture:cond} , {capture:act} [ , ] otherwise {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule provided_that_otherwise priority 16 : provided that {capture:cond} , {capture:act} [ , ] otherwise {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule provided_that_else priority 17 : provided that {capture:cond} , {capture:act} [ , ] else {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule only_if_otherwise priority 18 : only if {capture:cond} , {capture:act} [ , ] otherwise {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

rule as_long_as_otherwise priority 19 : as long as {capture:cond} , {capture:act} [ , ] otherwise {capture:alt}
tag cond CND
tag act CSQ
tag alt ALT

# two-part conditionals, marker first
rule if_then priority 20 : if {capture:cond} [ , ] then {capture:act}
tag cond CND
tag act CSQ

rule if_comma priority 22 : if {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

rule unless_comma priority 24 : unless {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

rule only_if_comma priority 26 : only if {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

rule provided_that_comma priority 28 : provided that {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

rule on_condition_comma priority 30 : on the condition that {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

rule as_long_as_comma priority 32 : as long as {capture:cond} , {capture:act}
tag cond CND
tag act CSQ

# two-part conditionals, consequence first
rule trailing_only_if priority 39 : {capture:act} only if {capture:cond:plain}
tag cond CND
tag act CSQ

rule trailing_if priority 40 : {capture:act} if {capture:cond:plain}
tag cond CND
tag act CSQ

rule trailing_unless priority 42 : {capture:act} unless {capture:cond:plain}
tag cond CND
tag act CSQ

rule trailing_as_long_as priority 43 : {capture:act} as long as {capture:cond:plain}
tag cond CND
tag act CSQ

rule trailing_provided_that priority 44 : {capture:act} provided that {capture:cond:plain}
tag cond CND
tag act CSQ

rule trailing_on_condition priority 45 : {capture:act} on the condition that {capture:cond:plain}
tag cond CND
tag act CSQ

# sequences; plain captures keep these rules off 3-action chains, which the
# rules could only partially annotate -- those fall through to the tagger
rule seq_first_then priority 52 : first {capture:one:plain} [ , ] [ and ] then {capture:two:plain}
tag one FA
tag two SA

rule seq_and_then priority 54 : {capture:one:plain} [ , ] and then {capture:two:plain}
tag one FA
tag two SA

rule seq_then priority 56 : {capture:one:plain} , then {capture:two:plain}
tag one FA
tag two SA

rule seq_and priority 58 : {capture:one:plain} and {capture:two:plain}
tag one FA
tag two SA
)";
  return text;
}

inline const RuleSet& default_rules() {
  static const RuleSet rs = compile_rules(default_rules_text());
  return rs;
}

}  // namespace clauseforge
