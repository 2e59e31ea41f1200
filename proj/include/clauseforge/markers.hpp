#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace clauseforge {

// Conditional/sequential marker phrases. Multiword phrases are matched over
// consecutive tokens.
inline const std::vector<std::string>& marker_lexicon() {
  static const std::vector<std::string> markers = {
      "if", "unless", "provided that", "only if", "on the condition that",
      "as long as", "otherwise", "else", "then", "and"};
  return markers;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// True for words that signal a conditional or sequential marker on their own.
// Function words that only occur inside multiword phrases ("on", "the",
// "that", "as", "long", "only") do not count.
inline bool is_marker_word(std::string_view word) {
  static const std::vector<std::string> words = {
      "if", "unless", "provided", "condition", "otherwise", "else", "then",
      "and"};
  std::string w = lowercase(word);
  return std::find(words.begin(), words.end(), w) != words.end();
}

}  // namespace clauseforge
