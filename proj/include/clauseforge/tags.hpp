#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clauseforge {

// The seven annotation labels. NN marks sentences with no conditional or
// sequential content and never appears as a BIO span label.
enum class TagType { CND, CSQ, ALT, FA, SA, TA, NN };

inline constexpr std::array<TagType, 7> kAllTags = {
    TagType::CND, TagType::CSQ, TagType::ALT,
    TagType::FA,  TagType::SA,  TagType::TA, TagType::NN};

// Tags that may label a span (everything but NN).
inline constexpr std::array<TagType, 6> kSpanTags = {
    TagType::CND, TagType::CSQ, TagType::ALT,
    TagType::FA,  TagType::SA,  TagType::TA};

inline std::string_view tag_name(TagType t) {
  switch (t) {
    case TagType::CND: return "CND";
    case TagType::CSQ: return "CSQ";
    case TagType::ALT: return "ALT";
    case TagType::FA:  return "FA";
    case TagType::SA:  return "SA";
    case TagType::TA:  return "TA";
    case TagType::NN:  return "NN";
  }
  throw std::logic_error("tag_name: bad TagType");
}

inline std::string_view tag_long_name(TagType t) {
  switch (t) {
    case TagType::CND: return "CONDITIONAL";
    case TagType::CSQ: return "CONSEQUENCE";
    case TagType::ALT: return "ALTERNATIVE";
    case TagType::FA:  return "FIRST_ACTION";
    case TagType::SA:  return "SECOND_ACTION";
    case TagType::TA:  return "THIRD_ACTION";
    case TagType::NN:  return "NONE";
  }
  throw std::logic_error("tag_long_name: bad TagType");
}

inline std::optional<TagType> parse_tag(std::string_view s) {
  for (TagType t : kAllTags) {
    if (s == tag_name(t) || s == tag_long_name(t)) return t;
  }
  return std::nullopt;
}

// BIO label alphabet. Index 0 is O; span tags contribute B-/I- pairs in
// kSpanTags order. The fixed order doubles as the Viterbi tie-break order.
struct BioLabel {
  enum Kind { O, B, I } kind = O;
  TagType tag = TagType::NN;  // meaningful only when kind != O

  bool operator==(const BioLabel&) const = default;
};

inline constexpr int kNumBioLabels = 13;  // O + {B,I} x 6 span tags

inline int bio_index(const BioLabel& l) {
  if (l.kind == BioLabel::O) return 0;
  for (int i = 0; i < static_cast<int>(kSpanTags.size()); ++i) {
    if (kSpanTags[i] == l.tag)
      return 1 + 2 * i + (l.kind == BioLabel::I ? 1 : 0);
  }
  throw std::logic_error("bio_index: NN is not a span label");
}

inline BioLabel bio_from_index(int idx) {
  if (idx == 0) return {};
  if (idx < 0 || idx >= kNumBioLabels)
    throw std::out_of_range("bio_from_index: " + std::to_string(idx));
  int k = idx - 1;
  return {k % 2 == 0 ? BioLabel::B : BioLabel::I, kSpanTags[k / 2]};
}

inline std::string bio_to_string(const BioLabel& l) {
  if (l.kind == BioLabel::O) return "O";
  std::string out = l.kind == BioLabel::B ? "B-" : "I-";
  out += tag_name(l.tag);
  return out;
}

inline std::optional<BioLabel> bio_parse(std::string_view s) {
  if (s == "O") return BioLabel{};
  if (s.size() < 3 || s[1] != '-') return std::nullopt;
  BioLabel l;
  if (s[0] == 'B') l.kind = BioLabel::B;
  else if (s[0] == 'I') l.kind = BioLabel::I;
  else return std::nullopt;
  auto t = parse_tag(s.substr(2));
  if (!t || *t == TagType::NN) return std::nullopt;
  l.tag = *t;
  return l;
}

}  // namespace clauseforge
