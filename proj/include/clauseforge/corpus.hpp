#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clauseforge/annotation.hpp"

namespace clauseforge {

enum class CorpusFormat { TOKEN_PER_LINE_BIO, JSON_SPANS };

enum class Split { TRAIN, VALIDATION, TEST };

struct QuarantinedRecord {
  std::size_t record_index = 0;  // 0-based position in the file
  std::string reason_code;       // e.g. LENGTH_MISMATCH, UNKNOWN_TAG
  std::string detail;
};

struct Corpus {
  std::string name;
  std::vector<AnnotationSet> examples;
  Split split = Split::TRAIN;
  std::vector<QuarantinedRecord> quarantined;
  std::vector<std::string> warnings;  // soft invariant violations, kept loaded
};

struct SplitStats {
  std::map<TagType, std::size_t> tag_counts;  // span counts, plus NN sentences
  std::size_t sentence_count = 0;
};

namespace detail {

// A sentence with no spans counts as NONE, matching how the dataset tables
// report NN at sentence granularity.
inline void accumulate(SplitStats& st, const AnnotationSet& ex) {
  ++st.sentence_count;
  if (ex.spans.empty()) {
    ++st.tag_counts[TagType::NN];
    return;
  }
  for (const auto& s : ex.spans) ++st.tag_counts[s.tag];
}

inline void admit(Corpus& c, AnnotationSet ex, std::size_t record_index) {
  if (auto err = validate(ex)) {
    // Range errors and overlaps make the record unusable; the single-span and
    // ordering invariants are data-sanity expectations, kept as warnings.
    bool hard = err->find("out of range") != std::string::npos ||
                err->find("overlapping") != std::string::npos ||
                err->find("NN is not") != std::string::npos;
    if (hard) {
      c.quarantined.push_back({record_index, "INVALID_ANNOTATION", *err});
      return;
    }
    c.warnings.push_back("record " + std::to_string(record_index) + ": " + *err);
  }
  sort_spans(ex.spans);
  c.examples.push_back(std::move(ex));
}

inline void load_bio_stream(Corpus& c, std::istream& in) {
  std::vector<std::string> words;
  std::vector<std::string> label_strs;
  std::size_t record = 0;
  auto flush = [&] {
    if (words.empty()) return;
    std::vector<BioLabel> labels;
    bool ok = true;
    for (const auto& ls : label_strs) {
      auto l = bio_parse(ls);
      if (!l) {
        c.quarantined.push_back({record, "UNKNOWN_TAG", "bad label '" + ls + "'"});
        ok = false;
        break;
      }
      labels.push_back(*l);
    }
    if (ok) admit(c, from_bio(labels, utterance_from_tokens(words)), record);
    words.clear();
    label_strs.clear();
    ++record;
  };
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) { flush(); continue; }
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      // tolerate space-separated two-column lines
      tab = line.rfind(' ');
    }
    if (tab == std::string::npos) {
      c.quarantined.push_back({record, "LENGTH_MISMATCH", "token without label: " + line});
      words.clear();
      label_strs.clear();
      // skip to next blank line
      while (std::getline(in, line) && !line.empty()) {}
      ++record;
      continue;
    }
    words.push_back(line.substr(0, tab));
    label_strs.push_back(line.substr(tab + 1));
  }
  flush();
}

inline void load_json_stream(Corpus& c, std::istream& in) {
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      c.quarantined.push_back({record, "BAD_JSON", e.what()});
      ++record;
      continue;
    }
    AnnotationSet ex;
    try {
      ex.utterance = tokenize(j.at("text").get<std::string>());
      for (const auto& js : j.value("spans", nlohmann::json::array())) {
        auto tag = parse_tag(js.at("tag").get<std::string>());
        if (!tag) throw std::invalid_argument("unknown tag " + js.at("tag").get<std::string>());
        ex.spans.push_back({*tag, js.at("start_token").get<std::size_t>(),
                            js.at("end_token").get<std::size_t>()});
      }
    } catch (const std::exception& e) {
      c.quarantined.push_back({record, "BAD_JSON", e.what()});
      ++record;
      continue;
    }
    admit(c, std::move(ex), record);
    ++record;
  }
}

}  // namespace detail

inline Corpus load_corpus_stream(std::istream& in, CorpusFormat format,
                                 std::string name = "") {
  Corpus c;
  c.name = std::move(name);
  if (format == CorpusFormat::TOKEN_PER_LINE_BIO)
    detail::load_bio_stream(c, in);
  else
    detail::load_json_stream(c, in);
  return c;
}

inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  return load_corpus_stream(in, format, path);
}

inline SplitStats stats(const Corpus& c) {
  SplitStats st;
  for (TagType t : kAllTags) st.tag_counts[t] = 0;
  for (const auto& ex : c.examples) detail::accumulate(st, ex);
  return st;
}

// Serialize a corpus. Spans come out sorted by token_start (admit() already
// canonicalized the order).
inline std::string convert_corpus(const Corpus& c, CorpusFormat target) {
  std::ostringstream out;
  if (target == CorpusFormat::TOKEN_PER_LINE_BIO) {
    for (const auto& ex : c.examples) {
      auto labels = to_bio(ex);
      for (std::size_t i = 0; i < labels.size(); ++i)
        out << ex.utterance.tokens[i].surface << '\t'
            << bio_to_string(labels[i]) << '\n';
      out << '\n';
    }
  } else {
    for (const auto& ex : c.examples) {
      nlohmann::json j;
      j["text"] = ex.utterance.text;
      j["spans"] = nlohmann::json::array();
      for (const auto& s : ex.spans)
        j["spans"].push_back({{"tag", std::string(tag_name(s.tag))},
                              {"start_token", s.token_start},
                              {"end_token", s.token_end}});
      out << j.dump() << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json quarantine_report(const Corpus& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : c.quarantined)
    arr.push_back({{"record", q.record_index},
                   {"reason", q.reason_code},
                   {"detail", q.detail}});
  return arr;
}

}  // namespace clauseforge
