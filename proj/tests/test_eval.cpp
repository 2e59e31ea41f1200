#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "clauseforge/eval.hpp"
#include "support/synthetic_candle.hpp"

using namespace clauseforge;

namespace {

// Independent brute-force counter: per tag, count gold spans, predicted
// spans, and pairs equal as (start, end) tuples.
EvalReport brute_force(const std::vector<AnnotationSet>& pred,
                       const std::vector<AnnotationSet>& gold) {
  EvalReport rep;
  for (TagType t : kSpanTags) {
    TagScore sc;
    sc.tag = t;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      std::vector<std::pair<std::size_t, std::size_t>> g, p;
      for (const auto& s : gold[i].spans)
        if (s.tag == t) g.push_back({s.token_start, s.token_end});
      for (const auto& s : pred[i].spans)
        if (s.tag == t) p.push_back({s.token_start, s.token_end});
      sc.support += g.size();
      sc.predicted += p.size();
      for (auto& ps : p)
        for (auto& gs : g)
          if (ps == gs) { ++sc.correct; break; }
    }
    sc.precision = sc.predicted ? double(sc.correct) / sc.predicted : 0;
    sc.recall = sc.support ? double(sc.correct) / sc.support : 0;
    sc.f1 = sc.precision + sc.recall > 0
                ? 2 * sc.precision * sc.recall / (sc.precision + sc.recall)
                : 0;
    rep.per_tag[t] = sc;
  }
  for (TagType t : kSpanTags) rep.average += rep.per_tag[t].f1 / 6.0;
  return rep;
}

std::vector<AnnotationSet> random_sets(std::mt19937_64& rng, std::size_t count) {
  std::vector<AnnotationSet> out;
  std::uniform_int_distribution<std::size_t> len(3, 9);
  std::uniform_int_distribution<int> nspans(0, 3);
  std::uniform_int_distribution<int> tag(0, 5);
  for (std::size_t i = 0; i < count; ++i) {
    AnnotationSet a;
    std::size_t n = len(rng);
    a.utterance = utterance_from_tokens(std::vector<std::string>(n, "w"));
    std::size_t pos = 0;
    int k = nspans(rng);
    for (int s = 0; s < k && pos + 1 < n; ++s) {
      std::uniform_int_distribution<std::size_t> start(pos, n - 1);
      std::size_t b = start(rng);
      std::uniform_int_distribution<std::size_t> stop(b + 1, n);
      std::size_t e = stop(rng);
      a.spans.push_back({kSpanTags[tag(rng)], b, e});
      pos = e;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace

TEST_CASE("gold scored against itself is perfect") {
  auto gold = synth::make_split(Split::VALIDATION);
  auto rep = evaluate(gold, gold);
  for (TagType t : kSpanTags) {
    REQUIRE(rep.per_tag.at(t).precision == 1.0);
    REQUIRE(rep.per_tag.at(t).recall == 1.0);
  }
  REQUIRE(rep.average == 1.0);
}

TEST_CASE("missing predictions yield zero recall and undefined precision") {
  AnnotationSet g;
  g.utterance = tokenize("a b c");
  g.spans = {{TagType::CND, 0, 2}};
  AnnotationSet p;
  p.utterance = g.utterance;
  auto rep = evaluate({p}, {g});
  REQUIRE(rep.per_tag.at(TagType::CND).recall == 0.0);
  REQUIRE(rep.per_tag.at(TagType::CND).precision == 0.0);
  REQUIRE(!rep.per_tag.at(TagType::CND).precision_defined);
  REQUIRE(render_score(0, false) == "undef");
}

TEST_CASE("hand-counted micro corpus: P=2/3, R=2/4 for CSQ") {
  std::vector<AnnotationSet> gold(3), pred(3);
  for (auto* v : {&gold, &pred})
    for (auto& a : *v)
      a.utterance = utterance_from_tokens(
          std::vector<std::string>(10, "w"));
  gold[0].spans = {{TagType::CSQ, 0, 2}, {TagType::CSQ, 4, 6}};
  gold[1].spans = {{TagType::CSQ, 1, 3}};
  gold[2].spans = {{TagType::CSQ, 2, 5}};
  pred[0].spans = {{TagType::CSQ, 0, 2}};   // correct
  pred[1].spans = {{TagType::CSQ, 1, 3}};   // correct
  pred[2].spans = {{TagType::CSQ, 2, 4}};   // wrong boundary
  auto rep = evaluate(pred, gold);
  auto sc = rep.per_tag.at(TagType::CSQ);
  REQUIRE(sc.precision == Catch::Approx(2.0 / 3.0));
  REQUIRE(sc.recall == Catch::Approx(0.5));
  REQUIRE(sc.f1 == Catch::Approx(0.571).margin(0.001));
}

TEST_CASE("evaluate rejects mismatched list lengths") {
  REQUIRE_THROWS_AS(evaluate(std::vector<AnnotationSet>(2),
                             std::vector<AnnotationSet>(3)),
                    std::invalid_argument);
}

TEST_CASE("scores match the brute-force counter on random corpora") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto gold = random_sets(rng, 4);
    auto pred = random_sets(rng, 4);
    for (std::size_t i = 0; i < 4; ++i)
      pred[i].utterance = gold[i].utterance;
    auto a = evaluate(pred, gold);
    auto b = brute_force(pred, gold);
    for (TagType t : kSpanTags) {
      REQUIRE(a.per_tag.at(t).precision == Catch::Approx(b.per_tag.at(t).precision));
      REQUIRE(a.per_tag.at(t).recall == Catch::Approx(b.per_tag.at(t).recall));
    }
    REQUIRE(a.average == Catch::Approx(b.average));
  }
}

TEST_CASE("removing a correct prediction never raises recall") {
  std::mt19937_64 rng(23);
  auto gold = random_sets(rng, 4);
  auto pred = gold;  // start perfect
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].spans.empty()) continue;
    auto removed = pred;
    TagType t = removed[i].spans.back().tag;
    double before = evaluate(pred, gold).per_tag.at(t).recall;
    removed[i].spans.pop_back();
    double after = evaluate(removed, gold).per_tag.at(t).recall;
    REQUIRE(after <= before);
  }
}

TEST_CASE("token-level scoring credits partial overlap") {
  AnnotationSet g;
  g.utterance = tokenize("a b c d");
  g.spans = {{TagType::CND, 0, 4}};
  AnnotationSet p;
  p.utterance = g.utterance;
  p.spans = {{TagType::CND, 0, 2}};
  REQUIRE(evaluate({p}, {g}).per_tag.at(TagType::CND).f1 == 0.0);
  auto tok = evaluate({p}, {g}, MatchLevel::TOKEN).per_tag.at(TagType::CND);
  REQUIRE(tok.precision == 1.0);
  REQUIRE(tok.recall == 0.5);
}

TEST_CASE("all-O external prediction file scores zero recall") {
  auto gold = synth::make_corpus(Split::TEST);
  auto path = std::filesystem::temp_directory_path() / "cf_allo.bio";
  {
    std::ofstream out(path);
    for (const auto& ex : gold.examples) {
      for (const auto& t : ex.utterance.tokens) out << t.surface << "\tO\n";
      out << "\n";
    }
  }
  auto rep = score_external(path.string(), CorpusFormat::TOKEN_PER_LINE_BIO, gold);
  for (TagType t : kSpanTags) REQUIRE(rep.per_tag.at(t).recall == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("gold file scored against itself through the external path") {
  auto gold = synth::make_corpus(Split::VALIDATION);
  auto path = std::filesystem::temp_directory_path() / "cf_gold.bio";
  {
    std::ofstream out(path);
    out << convert_corpus(gold, CorpusFormat::TOKEN_PER_LINE_BIO);
  }
  auto rep = score_external(path.string(), CorpusFormat::TOKEN_PER_LINE_BIO, gold);
  REQUIRE(rep.average == 1.0);
  std::filesystem::remove(path);
}

TEST_CASE("report renderer has one row per system with an Average column") {
  auto gold = synth::make_split(Split::VALIDATION);
  auto rep = evaluate(gold, gold);
  auto text = render_report_text({{"Rule-Based", rep}, {"CRF", rep}});
  REQUIRE(text.find("Rule-Based") != std::string::npos);
  REQUIRE(text.find("CRF") != std::string::npos);
  REQUIRE(text.find("Average") != std::string::npos);
  REQUIRE(text.find("TA-F1") != std::string::npos);
}
