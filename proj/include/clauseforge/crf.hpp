#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "clauseforge/annotation.hpp"
#include "clauseforge/corpus.hpp"
#include "clauseforge/eval.hpp"
#include "clauseforge/markers.hpp"

namespace clauseforge {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr int kFeatureVersion = 1;

struct FeatureVector {
  std::vector<std::string> keys;  // sparse weight-1 activations
};

namespace detail {

inline std::string word_shape(const std::string& w) {
  std::string s;
  for (char c : w) {
    if (std::isupper(static_cast<unsigned char>(c))) s += 'X';
    else if (std::islower(static_cast<unsigned char>(c))) s += 'x';
    else if (std::isdigit(static_cast<unsigned char>(c))) s += 'd';
    else s += c;
  }
  return s;
}

inline bool is_currency(const std::string& w) {
  return w.size() > 1 && (w[0] == '$' || w[0] == '\xe2') &&
         std::any_of(w.begin(), w.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

inline bool is_number_word(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) {
    return std::isdigit(c) || c == '.' || c == ',';
  }) && std::any_of(w.begin(), w.end(),
                    [](unsigned char c) { return std::isdigit(c); });
}

inline void word_features(FeatureVector& fv, const std::string& prefix,
                          const std::string& surface, bool full) {
  std::string lower = lowercase(surface);
  fv.keys.push_back("w" + prefix + "=" + lower);
  if (is_marker_word(lower)) fv.keys.push_back("mkr" + prefix);
  if (!full) return;
  fv.keys.push_back("sh" + prefix + "=" + word_shape(surface));
  if (lower.size() >= 2) {
    fv.keys.push_back("p2" + prefix + "=" + lower.substr(0, 2));
    fv.keys.push_back("s2" + prefix + "=" + lower.substr(lower.size() - 2));
  }
  if (lower.size() >= 3) {
    fv.keys.push_back("p3" + prefix + "=" + lower.substr(0, 3));
    fv.keys.push_back("s3" + prefix + "=" + lower.substr(lower.size() - 3));
  }
  if (is_number_word(surface)) fv.keys.push_back("num" + prefix);
  if (is_currency(surface)) fv.keys.push_back("cur" + prefix);
}

}  // namespace detail

// Feature templates: word identity/shape/affixes and number/currency/marker
// flags at the position, the same at +-1, word+marker at +-2 (with BOS/EOS
// sentinels), and marker bigrams. Bounded well under 40 keys per position.
inline FeatureVector featurize(const Utterance& u, std::size_t pos) {
  if (pos >= u.tokens.size()) throw std::out_of_range("featurize: bad position");
  FeatureVector fv;
  fv.keys.push_back("bias");
  detail::word_features(fv, "0", u.tokens[pos].surface, true);
  auto at = [&](long i) -> const std::string* {
    if (i < 0 || i >= static_cast<long>(u.tokens.size())) return nullptr;
    return &u.tokens[static_cast<std::size_t>(i)].surface;
  };
  long p = static_cast<long>(pos);
  for (long off : {-2L, -1L, 1L, 2L}) {
    std::string prefix = (off > 0 ? "+" : "") + std::to_string(off);
    if (const std::string* w = at(p + off)) {
      detail::word_features(fv, prefix, *w, std::abs(off) == 1);
    } else {
      fv.keys.push_back((off < 0 ? "BOS" : "EOS") + prefix);
    }
  }
  // marker bigrams around the position
  std::string w0 = lowercase(u.tokens[pos].surface);
  if (const std::string* wm = at(p - 1)) {
    std::string lm = lowercase(*wm);
    if (is_marker_word(lm) || is_marker_word(w0))
      fv.keys.push_back("bi-1=" + lm + "|" + w0);
  }
  if (const std::string* wp = at(p + 1)) {
    std::string lp = lowercase(*wp);
    if (is_marker_word(lp) || is_marker_word(w0))
      fv.keys.push_back("bi+1=" + w0 + "|" + lp);
  }
  return fv;
}

struct TrainingConfig {
  int epochs = 25;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
  bool shuffle = true;  // true: per-sentence SGD; false: full-batch ascent
};

struct TaggerModel {
  // emission[feature] is a dense per-label weight row
  std::unordered_map<std::string, std::array<double, kNumBioLabels>> emission;
  // transition[prev][next]; disallowed transitions are pinned at -inf
  std::array<std::array<double, kNumBioLabels>, kNumBioLabels> transition{};
  nlohmann::json metadata;

  TaggerModel() {
    for (int a = 0; a < kNumBioLabels; ++a)
      for (int b = 0; b < kNumBioLabels; ++b)
        transition[a][b] = transition_allowed(a, b) ? 0.0 : kNegInf;
  }

  // I-X may only follow B-X or I-X.
  static bool transition_allowed(int prev, int next) {
    BioLabel n = bio_from_index(next);
    if (n.kind != BioLabel::I) return true;
    BioLabel pl = bio_from_index(prev);
    return pl.kind != BioLabel::O && pl.tag == n.tag;
  }

  // I-X cannot start a sequence.
  static bool start_allowed(int label) {
    return bio_from_index(label).kind != BioLabel::I;
  }
};

// Exact Viterbi over arbitrary scores. emissions[t][l]; ties break toward the
// lower label index. Returns the argmax path and its score.
template <typename TransScore>
std::pair<std::vector<int>, double> viterbi(
    const std::vector<std::vector<double>>& emissions,
    const std::vector<double>& init, TransScore&& trans) {
  const std::size_t T = emissions.size();
  if (T == 0) return {{}, 0.0};
  const std::size_t L = emissions[0].size();
  std::vector<std::vector<double>> delta(T, std::vector<double>(L, kNegInf));
  std::vector<std::vector<int>> back(T, std::vector<int>(L, -1));
  for (std::size_t l = 0; l < L; ++l) delta[0][l] = init[l] + emissions[0][l];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      double best = kNegInf;
      int arg = -1;
      for (std::size_t p = 0; p < L; ++p) {
        double s = delta[t - 1][p] + trans(p, l);
        if (s > best) { best = s; arg = static_cast<int>(p); }
      }
      delta[t][l] = best + emissions[t][l];
      back[t][l] = arg;
    }
  }
  double best = kNegInf;
  int arg = 0;
  for (std::size_t l = 0; l < L; ++l)
    if (delta[T - 1][l] > best) { best = delta[T - 1][l]; arg = static_cast<int>(l); }
  std::vector<int> path(T);
  path[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t][path[t]];
  return {path, best};
}

namespace detail {

inline std::vector<std::vector<double>> emission_scores(const TaggerModel& m,
                                                        const Utterance& u) {
  std::vector<std::vector<double>> em(u.tokens.size(),
                                      std::vector<double>(kNumBioLabels, 0.0));
  for (std::size_t t = 0; t < u.tokens.size(); ++t) {
    for (const auto& key : featurize(u, t).keys) {
      auto it = m.emission.find(key);
      if (it == m.emission.end()) continue;  // unknown features score zero
      for (int l = 0; l < kNumBioLabels; ++l) em[t][l] += it->second[l];
    }
  }
  return em;
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

struct Lattice {
  std::vector<std::vector<double>> em;     // [T][L]
  std::vector<std::vector<double>> alpha;  // forward log scores
  std::vector<std::vector<double>> beta;   // backward log scores
  double log_z = 0.0;
};

inline Lattice forward_backward(const TaggerModel& m, const Utterance& u) {
  Lattice lat;
  lat.em = emission_scores(m, u);
  const std::size_t T = lat.em.size();
  const int L = kNumBioLabels;
  if (T == 0) return lat;
  lat.alpha.assign(T, std::vector<double>(L, kNegInf));
  lat.beta.assign(T, std::vector<double>(L, kNegInf));
  for (int l = 0; l < L; ++l)
    lat.alpha[0][l] =
        TaggerModel::start_allowed(l) ? lat.em[0][l] : kNegInf;
  std::vector<double> tmp(L);
  for (std::size_t t = 1; t < T; ++t) {
    for (int l = 0; l < L; ++l) {
      for (int p = 0; p < L; ++p)
        tmp[p] = lat.alpha[t - 1][p] + m.transition[p][l];
      lat.alpha[t][l] = log_sum_exp(tmp) + lat.em[t][l];
    }
  }
  for (int l = 0; l < L; ++l) lat.beta[T - 1][l] = 0.0;
  for (std::size_t t = T - 1; t > 0; --t) {
    for (int p = 0; p < L; ++p) {
      for (int l = 0; l < L; ++l)
        tmp[l] = m.transition[p][l] + lat.em[t][l] + lat.beta[t][l];
      lat.beta[t - 1][p] = log_sum_exp(tmp);
    }
  }
  lat.log_z = log_sum_exp(lat.alpha[T - 1]);
  return lat;
}

}  // namespace detail

// Per-position posterior marginals p(y_t = l | x); each row sums to 1.
inline std::vector<std::array<double, kNumBioLabels>> posterior_marginals(
    const TaggerModel& m, const Utterance& u) {
  auto lat = detail::forward_backward(m, u);
  std::vector<std::array<double, kNumBioLabels>> out(lat.em.size());
  for (std::size_t t = 0; t < lat.em.size(); ++t)
    for (int l = 0; l < kNumBioLabels; ++l)
      out[t][l] = std::exp(lat.alpha[t][l] + lat.beta[t][l] - lat.log_z);
  return out;
}

struct DecodeResult {
  std::vector<BioLabel> labels;
  double score = 0.0;
};

inline DecodeResult decode(const TaggerModel& m, const Utterance& u) {
  DecodeResult res;
  if (u.tokens.empty()) return res;
  auto em = detail::emission_scores(m, u);
  std::vector<double> init(kNumBioLabels);
  for (int l = 0; l < kNumBioLabels; ++l)
    init[l] = TaggerModel::start_allowed(l) ? 0.0 : kNegInf;
  auto [path, score] = viterbi(
      em, init, [&](std::size_t p, std::size_t l) { return m.transition[p][l]; });
  res.score = score;
  for (int idx : path) res.labels.push_back(bio_from_index(idx));
  return res;
}

// Gradient accumulator keyed like the model; used by training and by the
// finite-difference gradient check.
struct CrfGradient {
  std::unordered_map<std::string, std::array<double, kNumBioLabels>> emission;
  std::array<std::array<double, kNumBioLabels>, kNumBioLabels> transition{};
};

// Log-likelihood of the gold labels plus its gradient (no regularizer).
inline double log_likelihood_and_gradient(const TaggerModel& m,
                                          const AnnotationSet& ex,
                                          CrfGradient& grad) {
  const Utterance& u = ex.utterance;
  const std::size_t T = u.tokens.size();
  if (T == 0) return 0.0;
  auto gold = to_bio(ex);
  auto lat = detail::forward_backward(m, u);

  double gold_score = 0.0;
  int prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    int l = bio_index(gold[t]);
    gold_score += lat.em[t][l];
    if (t > 0) gold_score += m.transition[prev][l];
    prev = l;
  }

  // emission expectations via marginals
  prev = -1;
  for (std::size_t t = 0; t < T; ++t) {
    std::array<double, kNumBioLabels> marg;
    for (int l = 0; l < kNumBioLabels; ++l)
      marg[l] = std::exp(lat.alpha[t][l] + lat.beta[t][l] - lat.log_z);
    int gl = bio_index(gold[t]);
    for (const auto& key : featurize(u, t).keys) {
      auto& row = grad.emission[key];
      row[gl] += 1.0;
      for (int l = 0; l < kNumBioLabels; ++l) row[l] -= marg[l];
    }
    if (t > 0) grad.transition[prev][gl] += 1.0;
    prev = gl;
  }
  // transition expectations via pairwise marginals
  for (std::size_t t = 1; t < T; ++t) {
    for (int p = 0; p < kNumBioLabels; ++p) {
      if (lat.alpha[t - 1][p] == kNegInf) continue;
      for (int l = 0; l < kNumBioLabels; ++l) {
        if (m.transition[p][l] == kNegInf) continue;
        double lp = lat.alpha[t - 1][p] + m.transition[p][l] + lat.em[t][l] +
                    lat.beta[t][l] - lat.log_z;
        grad.transition[p][l] -= std::exp(lp);
      }
    }
  }
  return gold_score - lat.log_z;
}

struct TrainReport {
  std::vector<double> epoch_loss;    // mean negative log-likelihood
  std::vector<double> val_macro_f1;  // empty when no validation corpus given
};

namespace detail {

inline void apply_gradient(TaggerModel& m, const CrfGradient& grad,
                           double scale, double l2, double lr) {
  for (const auto& [key, row] : grad.emission) {
    auto& w = m.emission[key];
    for (int l = 0; l < kNumBioLabels; ++l)
      w[l] += lr * (row[l] * scale - l2 * w[l]);
  }
  if (l2 > 0) {
    // decay every existing weight, not only touched ones
    for (auto& [key, w] : m.emission) {
      if (grad.emission.count(key)) continue;
      for (int l = 0; l < kNumBioLabels; ++l) w[l] -= lr * l2 * w[l];
    }
  }
  for (int p = 0; p < kNumBioLabels; ++p)
    for (int l = 0; l < kNumBioLabels; ++l)
      if (m.transition[p][l] != kNegInf)
        m.transition[p][l] +=
            lr * (grad.transition[p][l] * scale - l2 * m.transition[p][l]);
}

inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

inline double macro_span_f1(const TaggerModel& m, const Corpus& corpus) {
  std::vector<AnnotationSet> preds;
  preds.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    auto res = decode(m, ex.utterance);
    auto a = from_bio(res.labels, ex.utterance);
    a.provenance = Provenance::MODEL;
    preds.push_back(std::move(a));
  }
  return evaluate(preds, corpus).average;
}

// L2-regularized maximum conditional likelihood. Full-batch gradient ascent
// by default; config.shuffle switches to seeded per-sentence SGD.
inline TaggerModel train(const Corpus& corpus, const TrainingConfig& config,
                         const Corpus* validation = nullptr,
                         TrainReport* report = nullptr,
                         const std::function<void(int, double, double)>&
                             epoch_callback = nullptr) {
  if (corpus.examples.empty())
    throw std::invalid_argument("train: empty corpus");
  if (config.epochs < 1 || config.learning_rate <= 0)
    throw std::invalid_argument("train: bad config");

  TaggerModel model;
  model.metadata = {
      {"epochs", config.epochs},
      {"learning_rate", config.learning_rate},
      {"l2", config.l2},
      {"seed", config.seed},
      {"shuffle", config.shuffle},
      {"corpus_fingerprint", detail::fnv1a(convert_corpus(corpus, CorpusFormat::TOKEN_PER_LINE_BIO))},
      {"train_sentences", corpus.examples.size()}};

  const double n = static_cast<double>(corpus.examples.size());
  std::vector<std::size_t> order(corpus.examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total_ll = 0.0;
    if (config.shuffle) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t idx : order) {
        CrfGradient grad;
        double ll = log_likelihood_and_gradient(model, corpus.examples[idx], grad);
        total_ll += ll;
        detail::apply_gradient(model, grad, 1.0, config.l2 / n,
                               config.learning_rate);
      }
    } else {
      CrfGradient grad;
      for (const auto& ex : corpus.examples)
        total_ll += log_likelihood_and_gradient(model, ex, grad);
      detail::apply_gradient(model, grad, 1.0 / n, config.l2,
                             config.learning_rate);
    }
    double loss = -total_ll / n;
    if (!std::isfinite(loss))
      throw std::runtime_error("train: non-finite loss at epoch " +
                               std::to_string(epoch + 1));
    double val_f1 = -1.0;
    if (validation) val_f1 = macro_span_f1(model, *validation);
    if (report) {
      report->epoch_loss.push_back(loss);
      if (validation) report->val_macro_f1.push_back(val_f1);
    }
    if (epoch_callback) epoch_callback(epoch + 1, loss, val_f1);
  }
  return model;
}

// ---- serialization: JSON container with version + checksum ----

inline nlohmann::json model_payload(const TaggerModel& m) {
  nlohmann::json j;
  j["format"] = "clauseforge-crf";
  j["version"] = 1;
  j["feature_version"] = kFeatureVersion;
  j["labels"] = nlohmann::json::array();
  for (int l = 0; l < kNumBioLabels; ++l)
    j["labels"].push_back(bio_to_string(bio_from_index(l)));
  j["metadata"] = m.metadata;
  nlohmann::json em = nlohmann::json::object();
  for (const auto& [key, row] : m.emission)
    em[key] = std::vector<double>(row.begin(), row.end());
  j["emission"] = std::move(em);
  nlohmann::json tr = nlohmann::json::array();
  for (int p = 0; p < kNumBioLabels; ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (int l = 0; l < kNumBioLabels; ++l)
      row.push_back(m.transition[p][l] == kNegInf
                        ? nlohmann::json()
                        : nlohmann::json(m.transition[p][l]));
    tr.push_back(std::move(row));
  }
  j["transition"] = std::move(tr);
  return j;
}

inline void save_model(const TaggerModel& m, const std::string& path) {
  nlohmann::json j = model_payload(m);
  std::string body = j.dump();
  nlohmann::json envelope;
  envelope["checksum"] = detail::fnv1a(body);
  envelope["model"] = std::move(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << envelope.dump(1) << '\n';
}

inline TaggerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json envelope;
  try {
    in >> envelope;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model file is not valid JSON: " + std::string(e.what()));
  }
  if (!envelope.contains("model") || !envelope.contains("checksum"))
    throw std::runtime_error("model file missing envelope fields");
  const nlohmann::json& j = envelope["model"];
  std::uint64_t expect = envelope["checksum"].get<std::uint64_t>();
  if (detail::fnv1a(j.dump()) != expect)
    throw std::runtime_error("model checksum mismatch (file corrupted?)");
  if (j.value("format", "") != "clauseforge-crf" || j.value("version", 0) != 1)
    throw std::runtime_error("unsupported model version");
  if (j.value("feature_version", 0) != kFeatureVersion)
    throw std::runtime_error("model built with a different feature template version");
  TaggerModel m;
  m.metadata = j.value("metadata", nlohmann::json::object());
  for (const auto& [key, row] : j.at("emission").items()) {
    auto vals = row.get<std::vector<double>>();
    if (vals.size() != kNumBioLabels)
      throw std::runtime_error("bad emission row for feature " + key);
    std::copy(vals.begin(), vals.end(), m.emission[key].begin());
  }
  const auto& tr = j.at("transition");
  for (int p = 0; p < kNumBioLabels; ++p)
    for (int l = 0; l < kNumBioLabels; ++l)
      m.transition[p][l] = tr.at(p).at(l).is_null() ? kNegInf
                                                    : tr.at(p).at(l).get<double>();
  return m;
}

}  // namespace clauseforge
