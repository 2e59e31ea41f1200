#pragma once

#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clauseforge/annotation.hpp"
#include "clauseforge/corpus.hpp"

namespace clauseforge {

struct TagScore {
  TagType tag = TagType::CND;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;      // gold span count
  std::size_t predicted = 0;    // predicted span count
  std::size_t correct = 0;
  bool precision_defined = true;
  bool recall_defined = true;
};

struct EvalReport {
  std::map<TagType, TagScore> per_tag;  // the six span tags
  double average = 0.0;                 // unweighted mean of the six F1s
};

enum class MatchLevel { SPAN, TOKEN };

// Exact-span scoring: a predicted span is correct iff tag and both token
// boundaries equal a gold span. TOKEN level credits per-token tag overlap
// instead.
inline EvalReport evaluate(const std::vector<AnnotationSet>& predictions,
                           const std::vector<AnnotationSet>& gold,
                           MatchLevel level = MatchLevel::SPAN) {
  if (predictions.size() != gold.size())
    throw std::invalid_argument(
        "evaluate: " + std::to_string(predictions.size()) + " predictions vs " +
        std::to_string(gold.size()) + " gold examples");
  EvalReport rep;
  for (TagType t : kSpanTags) rep.per_tag[t] = TagScore{t};

  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (level == MatchLevel::SPAN) {
      for (const auto& p : predictions[i].spans) {
        auto& sc = rep.per_tag[p.tag];
        ++sc.predicted;
        for (const auto& g : gold[i].spans) {
          if (g.tag == p.tag && g.token_start == p.token_start &&
              g.token_end == p.token_end) {
            ++sc.correct;
            break;
          }
        }
      }
      for (const auto& g : gold[i].spans) ++rep.per_tag[g.tag].support;
    } else {
      // per-token credit within each tag
      for (TagType t : kSpanTags) {
        auto covered = [&](const std::vector<SpanAnnotation>& spans,
                           std::size_t tok) {
          for (const auto& s : spans)
            if (s.tag == t && tok >= s.token_start && tok < s.token_end)
              return true;
          return false;
        };
        std::size_t n = gold[i].utterance.tokens.size();
        auto& sc = rep.per_tag[t];
        for (std::size_t tok = 0; tok < n; ++tok) {
          bool p = covered(predictions[i].spans, tok);
          bool g = covered(gold[i].spans, tok);
          if (p) ++sc.predicted;
          if (g) ++sc.support;
          if (p && g) ++sc.correct;
        }
      }
    }
  }

  double f1_sum = 0.0;
  for (auto& [t, sc] : rep.per_tag) {
    sc.precision_defined = sc.predicted > 0;
    sc.recall_defined = sc.support > 0;
    sc.precision = sc.predicted ? double(sc.correct) / sc.predicted : 0.0;
    sc.recall = sc.support ? double(sc.correct) / sc.support : 0.0;
    double pr = sc.precision + sc.recall;
    sc.f1 = pr > 0 ? 2 * sc.precision * sc.recall / pr : 0.0;
    f1_sum += sc.f1;
  }
  rep.average = f1_sum / kSpanTags.size();
  return rep;
}

inline EvalReport evaluate(const std::vector<AnnotationSet>& predictions,
                           const Corpus& gold,
                           MatchLevel level = MatchLevel::SPAN) {
  return evaluate(predictions, gold.examples, level);
}

// Score a prediction file (either on-disk format) against a gold corpus.
// Alignment is by sentence index.
inline EvalReport score_external(const std::string& pred_path,
                                 CorpusFormat format, const Corpus& gold,
                                 MatchLevel level = MatchLevel::SPAN) {
  Corpus pred = load_corpus(pred_path, format);
  if (!pred.quarantined.empty())
    throw std::runtime_error("prediction file has " +
                             std::to_string(pred.quarantined.size()) +
                             " malformed records");
  return evaluate(pred.examples, gold, level);
}

inline std::string render_score(double v, bool defined) {
  if (!defined) return "undef";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v * 100.0;
  return ss.str();
}

// One row per system, 6 tags x P/R/F1 plus the Average column.
inline std::string render_report_text(
    const std::vector<std::pair<std::string, EvalReport>>& systems) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "Algorithm";
  for (TagType t : kSpanTags)
    out << std::setw(8) << (std::string(tag_name(t)) + "-P")
        << std::setw(8) << (std::string(tag_name(t)) + "-R")
        << std::setw(8) << (std::string(tag_name(t)) + "-F1");
  out << "Average\n";
  for (const auto& [name, rep] : systems) {
    out << std::left << std::setw(24) << name;
    for (TagType t : kSpanTags) {
      const auto& sc = rep.per_tag.at(t);
      out << std::setw(8) << render_score(sc.precision, sc.precision_defined)
          << std::setw(8) << render_score(sc.recall, sc.recall_defined)
          << std::setw(8) << render_score(sc.f1, true);
    }
    out << std::fixed << std::setprecision(2) << rep.average * 100.0 << "\n";
  }
  return out.str();
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
  nlohmann::json j;
  for (TagType t : kSpanTags) {
    const auto& sc = rep.per_tag.at(t);
    j["tags"][std::string(tag_name(t))] = {
        {"precision", sc.precision}, {"recall", sc.recall}, {"f1", sc.f1},
        {"support", sc.support},     {"predicted", sc.predicted},
        {"correct", sc.correct}};
  }
  j["average"] = rep.average;
  return j;
}

inline std::string report_to_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "tag,precision,recall,f1,support\n";
  for (TagType t : kSpanTags) {
    const auto& sc = rep.per_tag.at(t);
    out << tag_name(t) << ',' << sc.precision << ',' << sc.recall << ','
        << sc.f1 << ',' << sc.support << '\n';
  }
  out << "AVERAGE,,," << rep.average << ",\n";
  return out.str();
}

}  // namespace clauseforge
