#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "clauseforge/crf.hpp"
#include "support/synthetic_candle.hpp"

using namespace clauseforge;

namespace {

Corpus toy_corpus() {
  Corpus c;
  auto add = [&](const std::string& bio) {
    std::istringstream in(bio);
    detail::load_bio_stream(c, in);
  };
  add("if\tO\nit\tB-CND\nrains\tI-CND\n,\tO\nstay\tB-CSQ\nhome\tI-CSQ\n\n");
  add("if\tO\nthe\tB-CND\nserver\tI-CND\nfails\tI-CND\n,\tO\ncall\tB-CSQ\nsupport\tI-CSQ\n\n");
  add("check\tB-FA\nbalance\tI-FA\nand\tO\nthen\tO\npay\tB-SA\nbills\tI-SA\n\n");
  add("good\tO\nmorning\tO\n\n");
  add("unless\tO\nyou\tB-CND\npay\tI-CND\n,\tO\nservice\tB-CSQ\nstops\tI-CSQ\n\n");
  add("book\tB-FA\na\tI-FA\ncab\tI-FA\nand\tO\nthen\tO\ncall\tB-SA\nme\tI-SA\n\n");
  add("if\tO\nbusy\tB-CND\n,\tO\nwait\tB-CSQ\n\n");
  add("hello\tO\nthere\tO\n\n");
  add("transfer\tB-CSQ\nmoney\tI-CSQ\nif\tO\nsafe\tB-CND\n\n");
  add("first\tO\nrun\tB-FA\nand\tO\nthen\tO\nstop\tB-SA\n\n");
  return c;
}

}  // namespace

TEST_CASE("featurize covers the documented templates") {
  auto u = tokenize("if it rains");
  auto fv = featurize(u, 0);
  auto has = [&](const std::string& k) {
    return std::find(fv.keys.begin(), fv.keys.end(), k) != fv.keys.end();
  };
  REQUIRE(has("w0=if"));
  REQUIRE(has("mkr0"));
  REQUIRE(has("BOS-1"));
  REQUIRE(has("BOS-2"));
  REQUIRE(has("w+1=it"));
}

TEST_CASE("currency token gets shape and currency features") {
  auto u = tokenize("send $400 now");
  auto fv = featurize(u, 1);
  auto has = [&](const std::string& k) {
    return std::find(fv.keys.begin(), fv.keys.end(), k) != fv.keys.end();
  };
  REQUIRE(has("cur0"));
  REQUIRE(has("sh0=$ddd"));
}

TEST_CASE("feature count per position stays under the template bound") {
  for (const char* s :
       {"if it rains, stay home", "a", "$400", "one two three four five six"}) {
    auto u = tokenize(s);
    for (std::size_t i = 0; i < u.tokens.size(); ++i)
      REQUIRE(featurize(u, i).keys.size() <= 40);
  }
}

TEST_CASE("viterbi equals exhaustive enumeration on small alphabets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> w(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t L = 2 + trial % 4;  // 2..5 labels
    std::size_t T = 1 + trial % 6;  // 1..6 positions
    std::vector<std::vector<double>> em(T, std::vector<double>(L));
    std::vector<std::vector<double>> tr(L, std::vector<double>(L));
    std::vector<double> init(L);
    for (auto& row : em)
      for (auto& x : row) x = w(rng);
    for (auto& row : tr)
      for (auto& x : row) x = w(rng);
    for (auto& x : init) x = w(rng);

    auto [path, score] =
        viterbi(em, init, [&](std::size_t p, std::size_t l) { return tr[p][l]; });

    // brute force over all L^T paths
    double best = kNegInf;
    std::vector<std::size_t> idx(T, 0);
    while (true) {
      double s = init[idx[0]] + em[0][idx[0]];
      for (std::size_t t = 1; t < T; ++t)
        s += tr[idx[t - 1]][idx[t]] + em[t][idx[t]];
      best = std::max(best, s);
      std::size_t d = 0;
      while (d < T && ++idx[d] == L) idx[d++] = 0;
      if (d == T) break;
    }
    REQUIRE(score == Catch::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("zero-weight model decodes a single token as O") {
  TaggerModel m;
  auto res = decode(m, tokenize("word"));
  REQUIRE(res.labels.size() == 1);
  REQUIRE(res.labels[0].kind == BioLabel::O);
  REQUIRE(res.score == 0.0);
}

TEST_CASE("decode on empty input is empty with score zero") {
  TaggerModel m;
  auto res = decode(m, Utterance{});
  REQUIRE(res.labels.empty());
  REQUIRE(res.score == 0.0);
}

TEST_CASE("decoded sequences never contain an orphan I-") {
  Corpus c = toy_corpus();
  TrainingConfig cfg;
  cfg.epochs = 5;
  TaggerModel m = train(c, cfg);
  for (const char* s : {"if it rains, stay home", "random words here",
                        "check balance and then pay bills", "unless you pay"}) {
    auto res = decode(m, tokenize(s));
    for (std::size_t i = 0; i < res.labels.size(); ++i) {
      if (res.labels[i].kind != BioLabel::I) continue;
      REQUIRE(i > 0);
      REQUIRE(res.labels[i - 1].kind != BioLabel::O);
      REQUIRE(res.labels[i - 1].tag == res.labels[i].tag);
    }
  }
}

TEST_CASE("training loss strictly decreases over the first epochs") {
  Corpus c = toy_corpus();
  TrainingConfig cfg;
  cfg.epochs = 25;
  cfg.shuffle = false;  // full-batch mode has a deterministic descent curve
  TrainReport rep;
  train(c, cfg, nullptr, &rep);
  REQUIRE(rep.epoch_loss.size() == 25);
  for (int i = 1; i < 5; ++i)
    REQUIRE(rep.epoch_loss[i] < rep.epoch_loss[i - 1]);
}

TEST_CASE("a single repeated sentence is memorized exactly") {
  Corpus c;
  std::istringstream in(
      "if\tO\nit\tB-CND\nrains\tI-CND\n,\tO\nstay\tB-CSQ\nhome\tI-CSQ\n\n");
  detail::load_bio_stream(c, in);
  TrainingConfig cfg;
  cfg.epochs = 60;
  TaggerModel m = train(c, cfg);
  auto res = decode(m, c.examples[0].utterance);
  REQUIRE(res.labels == to_bio(c.examples[0]));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Corpus c = toy_corpus();
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.shuffle = true;
  cfg.seed = 99;
  TaggerModel a = train(c, cfg);
  TaggerModel b = train(c, cfg);
  REQUIRE(a.emission.size() == b.emission.size());
  for (const auto& [k, row] : a.emission) {
    auto it = b.emission.find(k);
    REQUIRE(it != b.emission.end());
    for (int l = 0; l < kNumBioLabels; ++l) REQUIRE(row[l] == it->second[l]);
  }
}

TEST_CASE("training rejects an empty corpus") {
  Corpus c;
  REQUIRE_THROWS_AS(train(c, TrainingConfig{}), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences") {
  // 3-token instance; restrict to a trained-ish random model
  Corpus c;
  std::istringstream in("move\tB-CSQ\nthe\tI-CSQ\nmoney\tI-CSQ\n\n");
  detail::load_bio_stream(c, in);
  const AnnotationSet& ex = c.examples[0];

  TaggerModel m;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  for (std::size_t t = 0; t < 3; ++t)
    for (const auto& key : featurize(ex.utterance, t).keys)
      for (int l = 0; l < kNumBioLabels; ++l) m.emission[key][l] = w(rng);
  for (int p = 0; p < kNumBioLabels; ++p)
    for (int l = 0; l < kNumBioLabels; ++l)
      if (m.transition[p][l] != kNegInf) m.transition[p][l] = w(rng);

  CrfGradient grad;
  log_likelihood_and_gradient(m, ex, grad);

  const double h = 1e-5;
  auto ll = [&](TaggerModel& model) {
    CrfGradient g;
    return log_likelihood_and_gradient(model, ex, g);
  };
  // a few emission coordinates
  int checked = 0;
  for (auto& [key, row] : m.emission) {
    if (checked >= 24) break;
    int l = checked % kNumBioLabels;
    double orig = row[l];
    row[l] = orig + h;
    double up = ll(m);
    row[l] = orig - h;
    double down = ll(m);
    row[l] = orig;
    double numeric = (up - down) / (2 * h);
    double analytic = grad.emission.count(key) ? grad.emission[key][l] : 0.0;
    if (std::abs(numeric) > 1e-8 || std::abs(analytic) > 1e-8)
      REQUIRE(analytic ==
              Catch::Approx(numeric).epsilon(1e-4).margin(1e-8));
    ++checked;
  }
  // all allowed transitions
  for (int p = 0; p < kNumBioLabels; ++p) {
    for (int l = 0; l < kNumBioLabels; ++l) {
      if (m.transition[p][l] == kNegInf) continue;
      double orig = m.transition[p][l];
      m.transition[p][l] = orig + h;
      double up = ll(m);
      m.transition[p][l] = orig - h;
      double down = ll(m);
      m.transition[p][l] = orig;
      double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) > 1e-8 || std::abs(grad.transition[p][l]) > 1e-8)
        REQUIRE(grad.transition[p][l] ==
                Catch::Approx(numeric).epsilon(1e-4).margin(1e-8));
    }
  }
}

TEST_CASE("posterior marginals sum to one at every position") {
  Corpus c = toy_corpus();
  TrainingConfig cfg;
  cfg.epochs = 5;
  TaggerModel m = train(c, cfg);
  auto marg = posterior_marginals(m, tokenize("if it rains, stay home"));
  for (const auto& row : marg) {
    double s = 0;
    for (double v : row) s += v;
    REQUIRE(s == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("save/load round-trips bit-exactly") {
  Corpus c = toy_corpus();
  TrainingConfig cfg;
  cfg.epochs = 5;
  TaggerModel m = train(c, cfg);
  auto path = std::filesystem::temp_directory_path() / "cf_model_test.json";
  save_model(m, path.string());
  TaggerModel m2 = load_model(path.string());
  REQUIRE(m2.emission.size() == m.emission.size());
  std::mt19937_64 rng(5);
  const auto& actions = synth::action_pool();
  for (int i = 0; i < 100; ++i) {
    auto u = tokenize(synth::pick(actions, rng) + " if " +
                      synth::pick(synth::condition_pool(), rng));
    auto a = decode(m, u);
    auto b = decode(m2, u);
    REQUIRE(a.labels == b.labels);
    REQUIRE(a.score == b.score);
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupted model file fails the checksum") {
  Corpus c = toy_corpus();
  TaggerModel m = train(c, TrainingConfig{.epochs = 1});
  auto path = std::filesystem::temp_directory_path() / "cf_model_corrupt.json";
  save_model(m, path.string());
  // flip a digit inside the payload
  std::ifstream in(path);
  std::string body((std::istreambuf_iterator<char>(in)), {});
  in.close();
  auto pos = body.find("emission");
  pos = body.find_first_of("0123456789", pos);
  body[pos] = body[pos] == '9' ? '8' : '9';
  std::ofstream out(path);
  out << body;
  out.close();
  REQUIRE_THROWS_WITH(load_model(path.string()),
                      Catch::Matchers::ContainsSubstring("checksum") ||
                          Catch::Matchers::ContainsSubstring("JSON"));
  std::filesystem::remove(path);
}

TEST_CASE("unknown feature version is rejected explicitly") {
  Corpus c = toy_corpus();
  TaggerModel m = train(c, TrainingConfig{.epochs = 1});
  auto path = std::filesystem::temp_directory_path() / "cf_model_ver.json";
  nlohmann::json payload = model_payload(m);
  payload["feature_version"] = 999;
  nlohmann::json envelope;
  envelope["checksum"] = detail::fnv1a(payload.dump());
  envelope["model"] = payload;
  std::ofstream out(path);
  out << envelope.dump();
  out.close();
  REQUIRE_THROWS_WITH(load_model(path.string()),
                      Catch::Matchers::ContainsSubstring("feature template"));
  std::filesystem::remove(path);
}
