#pragma once

#include <cctype>
#include <set>
#include <string>
#include <vector>

#include "clauseforge/markers.hpp"
#include "clauseforge/token.hpp"

namespace clauseforge {

enum class WordCategory { VERB_LIKE, NOUN_LIKE, FUNCTION, NUMBER, OTHER };

struct SyntaxHints {
  std::vector<WordCategory> categories;     // one per token
  std::vector<std::size_t> coordination_sites;  // indices of and/or/list-commas
};

// Pluggable analysis contract. The default provider is a deterministic
// lexicon + suffix heuristic; a real dependency parser can be wired in
// behind the same interface.
class SyntaxProvider {
 public:
  virtual ~SyntaxProvider() = default;
  virtual SyntaxHints analyze(const Utterance& u) const = 0;
};

namespace detail {

inline const std::set<std::string>& function_words() {
  static const std::set<std::string> words = {
      "the", "a", "an", "my", "your", "his", "her", "their", "our", "its",
      "this", "that", "these", "those", "some", "any", "each", "every",
      "to", "of", "in", "on", "at", "for", "with", "from", "by", "about",
      "into", "onto", "over", "under", "through", "after", "before",
      "i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them",
      "myself", "yourself", "himself", "herself", "itself", "ourselves",
      "is", "are", "was", "were", "be", "been", "being", "am",
      "do", "does", "did", "will", "would", "can", "could", "should",
      "shall", "may", "might", "must", "not", "no", "yes", "please",
      "kindly", "also", "it's", "that's", "there", "here",
      "if", "unless", "then", "else", "otherwise", "and", "or", "but",
      "as", "long", "only", "provided", "condition", "so", "when", "while"};
  return words;
}

inline const std::set<std::string>& verb_stems() {
  static const std::set<std::string> words = {
      "transfer", "check", "move", "add", "send", "pay", "cancel", "book",
      "buy", "stay", "apply", "verify", "call", "open", "close", "order",
      "renew", "upgrade", "downgrade", "schedule", "remind", "show", "tell",
      "activate", "deactivate", "block", "unblock", "update", "change",
      "report", "deposit", "withdraw", "get", "give", "make", "set",
      "notify", "email", "text", "recharge", "extend", "stop", "start",
      "submit", "review", "approve", "reject", "confirm", "register",
      "enroll", "claim", "file", "request", "issue", "print", "download",
      "upload", "share", "delete", "remove", "connect", "install",
      "restart", "reset", "subscribe", "unsubscribe", "like", "want",
      "need", "have", "has", "had", "go", "come", "take", "put", "keep",
      "let", "help", "find", "search", "look", "turn", "switch", "log",
      "sign", "raise", "lower", "increase", "decrease", "enable",
      "disable", "freeze", "unfreeze", "redeem", "transferred", "rain"};
  return words;
}

inline const std::set<std::string>& noun_suffixes() {
  static const std::set<std::string> sfx = {"tion", "ment", "ness", "ance",
                                            "ence", "ity", "ship", "age"};
  return sfx;
}

inline bool looks_numeric(const std::string& w) {
  if (w.empty()) return false;
  std::size_t i = (w[0] == '$' || w[0] == '#') ? 1 : 0;
  if (i >= w.size()) return false;
  bool any_digit = false;
  for (; i < w.size(); ++i) {
    char c = w[i];
    if (std::isdigit(static_cast<unsigned char>(c))) any_digit = true;
    else if (c != '.' && c != ',' && c != '%') return false;
  }
  return any_digit;
}

}  // namespace detail

class HeuristicSyntaxProvider : public SyntaxProvider {
 public:
  SyntaxHints analyze(const Utterance& u) const override {
    SyntaxHints h;
    h.categories.reserve(u.tokens.size());
    for (std::size_t i = 0; i < u.tokens.size(); ++i)
      h.categories.push_back(categorize(u.tokens[i].surface, i == 0));
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      std::string w = lowercase(u.tokens[i].surface);
      if (w == "and" || w == "or") {
        h.coordination_sites.push_back(i);
      } else if (w == "," && i > 0 && i + 1 < u.tokens.size()) {
        // a comma between two nominal groups reads as a list separator
        auto nominal = [&](std::size_t j) {
          return h.categories[j] == WordCategory::NOUN_LIKE ||
                 h.categories[j] == WordCategory::NUMBER;
        };
        if (nominal(i - 1) && nominal(i + 1)) h.coordination_sites.push_back(i);
      }
    }
    return h;
  }

 private:
  static WordCategory categorize(const std::string& surface, bool sentence_initial) {
    std::string w = lowercase(surface);
    if (detail::looks_numeric(surface)) return WordCategory::NUMBER;
    if (detail::function_words().count(w)) return WordCategory::FUNCTION;
    if (is_verb_form(w)) return WordCategory::VERB_LIKE;
    for (const auto& sfx : detail::noun_suffixes())
      if (w.size() > sfx.size() + 2 && w.ends_with(sfx))
        return WordCategory::NOUN_LIKE;
    // capitalized mid-sentence words read as proper names
    if (!sentence_initial && !surface.empty() &&
        std::isupper(static_cast<unsigned char>(surface[0])))
      return WordCategory::NOUN_LIKE;
    if (common_noun(w)) return WordCategory::NOUN_LIKE;
    return WordCategory::OTHER;
  }

  static bool is_verb_form(const std::string& w) {
    const auto& stems = detail::verb_stems();
    if (stems.count(w)) return true;
    for (const char* sfx : {"s", "ed", "ing", "es"}) {
      std::string s(sfx);
      if (w.size() > s.size() + 2 && w.ends_with(s) &&
          stems.count(w.substr(0, w.size() - s.size())))
        return true;
    }
    // "raining" from stem "rain" drops nothing; also try doubling repair
    if (w.size() > 5 && w.ends_with("ing") && stems.count(w.substr(0, w.size() - 3) + "e"))
      return true;
    return false;
  }

  static bool common_noun(const std::string& w) {
    static const std::set<std::string> nouns = {
        "account", "balance", "bill", "policy", "statement", "money",
        "card", "loan", "phone", "plan", "data", "ticket", "appointment",
        "doctor", "bank", "wife", "husband", "home", "house", "raincoat",
        "umbrella", "server", "network", "internet", "password", "address",
        "name", "number", "payment", "refund", "branch", "agent", "manager",
        "document", "bucks", "dollars", "savings", "saving", "checking",
        "limit", "fee", "interest", "credit", "debit", "sim", "minutes"};
    return nouns.count(w) > 0;
  }
};

inline const SyntaxProvider& default_syntax_provider() {
  static const HeuristicSyntaxProvider p;
  return p;
}

}  // namespace clauseforge
