#pragma once

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace clauseforge {

struct Token {
  std::string surface;
  std::size_t start = 0;  // char offset into the utterance text
  std::size_t end = 0;    // exclusive

  bool operator==(const Token&) const = default;
};

// A tokenized sentence. Tokens are non-overlapping, ordered, and each
// surface equals text[start, end).
struct Utterance {
  std::string text;
  std::vector<Token> tokens;

  bool operator==(const Utterance&) const = default;
};

namespace detail {

inline bool is_detachable_punct(char c) {
  return c == ',' || c == '.' || c == ';' || c == ':' || c == '?' || c == '!';
}

}  // namespace detail

// Whitespace tokenization with leading/trailing ,.;:?! detached as their own
// tokens. '$' glued to digits stays with the number ("$400" is one token);
// apostrophes are kept inside words ("wife's", "don't").
inline Utterance tokenize(std::string text) {
  Utterance u;
  u.text = std::move(text);
  const std::string& s = u.text;
  std::size_t i = 0;
  while (i < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[i]))) { ++i; continue; }
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    // word is s[i, j); peel punctuation off both ends
    std::size_t b = i, e = j;
    while (b < e && detail::is_detachable_punct(s[b])) {
      u.tokens.push_back({s.substr(b, 1), b, b + 1});
      ++b;
    }
    std::size_t tail = e;
    while (tail > b && detail::is_detachable_punct(s[tail - 1])) --tail;
    if (tail > b) u.tokens.push_back({s.substr(b, tail - b), b, tail});
    for (std::size_t k = tail; k < e; ++k)
      u.tokens.push_back({s.substr(k, 1), k, k + 1});
    i = j;
  }
  return u;
}

// Build an utterance from pre-split tokens, joining with single spaces.
inline Utterance utterance_from_tokens(const std::vector<std::string>& words) {
  Utterance u;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) u.text += ' ';
    std::size_t start = u.text.size();
    u.text += words[i];
    u.tokens.push_back({words[i], start, u.text.size()});
  }
  return u;
}

inline void validate_utterance(const Utterance& u) {
  std::size_t prev_end = 0;
  bool first = true;
  for (const Token& t : u.tokens) {
    if (t.start >= t.end || t.end > u.text.size())
      throw std::invalid_argument("token offsets out of range");
    if (!first && t.start < prev_end)
      throw std::invalid_argument("tokens overlap or are out of order");
    if (u.text.compare(t.start, t.end - t.start, t.surface) != 0)
      throw std::invalid_argument("token surface does not match text");
    prev_end = t.end;
    first = false;
  }
}

}  // namespace clauseforge
