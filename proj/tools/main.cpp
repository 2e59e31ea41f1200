// clauseforge command-line driver: every pipeline stage behind one binary.
//
// Exit codes: 0 success, 1 usage error, 2 data error.
// Diagnostics go to stderr; data goes to stdout so stages compose in pipes.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "clauseforge/corpus.hpp"
#include "clauseforge/crf.hpp"
#include "clauseforge/ensemble.hpp"
#include "clauseforge/eval.hpp"
#include "clauseforge/graph.hpp"
#include "clauseforge/restructure.hpp"

namespace {

using namespace clauseforge;

constexpr const char* kVersion = "0.1.0";

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Defaults in ascending precedence: built-in < config file < CLI flags.
// The config file is plain `key = value` lines selected by CLAUSE_FORGE_CONFIG.
struct AppConfig {
  std::string rules = "default";  // "default", "none", or a rule-file path
  std::string model;              // model file path; empty = no model
  std::string format = "json";    // default output format for `tag`
  bool no_expand = false;
  std::uint64_t seed = 1;
};

AppConfig load_app_config() {
  AppConfig cfg;
  const char* path = std::getenv("CLAUSE_FORGE_CONFIG");
  if (!path || !*path) return cfg;
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open config file: ") + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw DataError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "rules") cfg.rules = value;
    else if (key == "model") cfg.model = value;
    else if (key == "format") cfg.format = value;
    else if (key == "no_expand") cfg.no_expand = (value == "true" || value == "1");
    else if (key == "seed") cfg.seed = std::stoull(value);
    else
      throw DataError("config line " + std::to_string(lineno) +
                      ": unknown key '" + key + "'");
  }
  return cfg;
}

CorpusFormat parse_format(const std::string& s) {
  if (s == "bio") return CorpusFormat::TOKEN_PER_LINE_BIO;
  if (s == "json") return CorpusFormat::JSON_SPANS;
  throw CLI::ValidationError("format", "expected 'bio' or 'json', got '" + s + "'");
}

Corpus load_checked(const std::string& path, const std::string& format) {
  std::ifstream probe(path);
  if (!probe) throw DataError("cannot open corpus file: " + path);
  probe.close();
  return load_corpus(path, parse_format(format));
}

void report_quarantine(const Corpus& c, const std::string& sink_path) {
  if (c.quarantined.empty() && c.warnings.empty()) return;
  auto rep = quarantine_report(c);
  if (!sink_path.empty()) {
    std::ofstream out(sink_path);
    if (!out) throw DataError("cannot write quarantine report: " + sink_path);
    out << rep.dump(2) << '\n';
  }
  std::cerr << "warning: " << c.quarantined.size() << " record(s) quarantined, "
            << c.warnings.size() << " soft warning(s)\n";
  for (const auto& w : c.warnings) std::cerr << "  " << w << '\n';
  if (sink_path.empty())
    for (const auto& q : c.quarantined)
      std::cerr << "  record " << q.record_index << " [" << q.reason_code
                << "] " << q.detail << '\n';
}

nlohmann::json spans_to_json(const std::vector<SpanAnnotation>& spans) {
  auto arr = nlohmann::json::array();
  for (const auto& s : spans)
    arr.push_back({{"tag", std::string(tag_name(s.tag))},
                   {"start_token", s.token_start},
                   {"end_token", s.token_end}});
  return arr;
}

// Accept either plain text or a JSON object carrying a "text" field, so the
// stages compose: expand | tag | graph.
std::string text_of_line(const std::string& line) {
  if (!line.empty() && line.front() == '{') {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.contains("text") && j["text"].is_string())
      return j["text"].get<std::string>();
    if (j.is_discarded())
      throw DataError("malformed JSON input line: " + line);
  }
  return line;
}

std::istream& open_input(std::ifstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cin;
  file.open(path);
  if (!file) throw DataError("cannot open input file: " + path);
  return file;
}

// ---------------------------------------------------------------- stats

int cmd_stats(const std::string& path, const std::string& format, bool as_json) {
  Corpus c = load_checked(path, format);
  report_quarantine(c, "");
  SplitStats st = stats(c);
  if (as_json) {
    nlohmann::json j;
    j["sentences"] = st.sentence_count;
    for (TagType t : kAllTags)
      j["tags"][std::string(tag_name(t))] = st.tag_counts.at(t);
    std::cout << j.dump() << '\n';
  } else {
    std::cout << "Sentences: " << st.sentence_count << '\n';
    for (TagType t : kAllTags)
      std::cout << "  " << tag_long_name(t) << " (" << tag_name(t)
                << "): " << st.tag_counts.at(t) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const std::string& path, const std::string& from,
                const std::string& to, const std::string& quarantine_path) {
  Corpus c = load_checked(path, from);
  report_quarantine(c, quarantine_path);
  std::cout << convert_corpus(c, parse_format(to));
  return 0;
}

// ---------------------------------------------------------------- expand

int cmd_expand(const std::string& input, bool with_trace) {
  std::ifstream file;
  std::istream& in = open_input(file, input);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto trace = expand_clauses(tokenize(text_of_line(line)));
    nlohmann::json j;
    j["text"] = trace.expanded.text;
    j["original"] = trace.original.text;
    j["changed"] = trace.changed();
    if (with_trace) {
      auto segs = nlohmann::json::array();
      for (const auto& s : trace.copied_segments)
        segs.push_back({{"src_begin", s.src_begin},
                        {"src_end", s.src_end},
                        {"insert_after", s.insert_after}});
      j["copied"] = segs;
    }
    std::cout << j.dump() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- tag

int cmd_tag(const AppConfig& cfg, const std::string& input,
            const std::string& out_format) {
  RuleSet file_rules;
  EnsembleConfig ens_cfg;
  if (cfg.rules == "default") {
    ens_cfg.rules = &default_rules();
  } else if (cfg.rules != "none") {
    std::ifstream rf(cfg.rules);
    if (!rf) throw DataError("cannot open rule file: " + cfg.rules);
    std::stringstream buf;
    buf << rf.rdbuf();
    file_rules = compile_rules(buf.str());
    ens_cfg.rules = &file_rules;
  }
  TaggerModel model;
  if (!cfg.model.empty()) {
    model = load_model(cfg.model);
    ens_cfg.model = &model;
  }
  ens_cfg.expansion_enabled = !cfg.no_expand;
  if (!ens_cfg.rules && !ens_cfg.model)
    throw CLI::ValidationError("tag", "need --rules and/or --model");
  Ensemble ens(ens_cfg);

  bool bio_out = parse_format(out_format) == CorpusFormat::TOKEN_PER_LINE_BIO;
  std::ifstream file;
  std::istream& in = open_input(file, input);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto result = ens.run(tokenize(text_of_line(line)));
    for (const auto& sent : result.sentences) {
      const auto& a = sent.annotations;
      if (bio_out) {
        auto labels = to_bio(a);
        for (std::size_t i = 0; i < labels.size(); ++i)
          std::cout << a.utterance.tokens[i].surface << '\t'
                    << bio_to_string(labels[i]) << '\n';
        std::cout << '\n';
      } else {
        nlohmann::json j;
        j["text"] = a.utterance.text;
        j["spans"] = spans_to_json(a.spans);
        j["provenance"] = std::string(provenance_name(a.provenance));
        j["expanded"] = sent.trace.changed();
        std::cout << j.dump() << '\n';
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------- train

int cmd_train(const std::string& corpus_path, const std::string& format,
              const std::string& out_path, const std::string& validation_path,
              const TrainingConfig& tc) {
  Corpus train_corpus = load_checked(corpus_path, format);
  report_quarantine(train_corpus, "");
  Corpus val;
  const Corpus* val_ptr = nullptr;
  if (!validation_path.empty()) {
    val = load_checked(validation_path, format);
    val_ptr = &val;
  }
  TrainReport rep;
  auto model = train(train_corpus, tc, val_ptr, &rep,
                     [](int epoch, double loss, double val_f1) {
                       std::cerr << "epoch " << epoch << " loss " << loss;
                       if (val_f1 >= 0) std::cerr << " val-F1 " << val_f1;
                       std::cerr << '\n';
                     });
  save_model(model, out_path);
  nlohmann::json j;
  j["model"] = out_path;
  j["epochs"] = tc.epochs;
  j["final_loss"] = rep.epoch_loss.empty() ? 0.0 : rep.epoch_loss.back();
  if (!rep.val_macro_f1.empty()) j["final_val_f1"] = rep.val_macro_f1.back();
  std::cout << j.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(const std::string& pred_path, const std::string& pred_format,
             const std::string& gold_path, const std::string& gold_format,
             const std::string& level, const std::string& out_style,
             const std::string& system_name) {
  Corpus gold = load_checked(gold_path, gold_format);
  report_quarantine(gold, "");
  MatchLevel lvl;
  if (level == "span") lvl = MatchLevel::SPAN;
  else if (level == "token") lvl = MatchLevel::TOKEN;
  else throw CLI::ValidationError("level", "expected 'span' or 'token'");
  EvalReport rep =
      score_external(pred_path, parse_format(pred_format), gold, lvl);
  if (out_style == "json") std::cout << report_to_json(rep).dump() << '\n';
  else if (out_style == "csv") std::cout << report_to_csv(rep);
  else std::cout << render_report_text({{system_name, rep}});
  return 0;
}

// ---------------------------------------------------------------- graph

int cmd_graph(const std::string& input, bool as_dot) {
  std::ifstream file;
  std::istream& in = open_input(file, input);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("text"))
      throw DataError("graph input must be JSON lines with a 'text' field");
    AnnotationSet a;
    a.utterance = tokenize(j["text"].get<std::string>());
    for (const auto& s : j.value("spans", nlohmann::json::array())) {
      auto tag = parse_tag(s.at("tag").get<std::string>());
      if (!tag) throw DataError("unknown tag in spans: " + s.at("tag").dump());
      a.spans.push_back({*tag, s.at("start_token").get<std::size_t>(),
                         s.at("end_token").get<std::size_t>()});
    }
    if (auto err = validate(a))
      throw DataError("invalid annotation record: " + *err);
    auto g = create_graph(a);
    if (as_dot) std::cout << graph_to_dot(g);
    else std::cout << graph_to_json(g).dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  AppConfig cfg;
  try {
    cfg = load_app_config();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"clauseforge: conditional and multi-intent utterance decomposition"};
  app.set_version_flag("--version", std::string("clauseforge ") + kVersion +
                                        " model-format clauseforge-crf/1"
                                        " feature-version " +
                                        std::to_string(kFeatureVersion));
  app.require_subcommand(0, 1);

  // stats
  std::string st_corpus, st_format = "bio";
  bool st_json = false;
  auto* st = app.add_subcommand("stats", "Per-tag corpus statistics");
  st->add_option("--corpus", st_corpus, "corpus file")->required();
  st->add_option("--format", st_format, "input format: bio|json");
  st->add_flag("--json", st_json, "emit JSON instead of text");

  // convert
  std::string cv_input, cv_from = "bio", cv_to = "json", cv_quarantine;
  auto* cv = app.add_subcommand("convert", "Convert between corpus formats");
  cv->add_option("--input", cv_input, "corpus file")->required();
  cv->add_option("--from", cv_from, "input format: bio|json");
  cv->add_option("--to", cv_to, "output format: bio|json");
  cv->add_option("--quarantine", cv_quarantine, "write quarantine report here");

  // expand
  std::string ex_input;
  bool ex_trace = false;
  auto* ex = app.add_subcommand("expand", "Clause restructuring on text lines");
  ex->add_option("--input", ex_input, "input file (default: stdin)");
  ex->add_flag("--trace", ex_trace, "include copied-segment trace");

  // tag
  std::string tg_input, tg_rules = cfg.rules, tg_model = cfg.model,
              tg_format = cfg.format;
  bool tg_no_expand = cfg.no_expand;
  auto* tg = app.add_subcommand("tag", "Run the grammar+model ensemble");
  tg->add_option("--input", tg_input, "input file (default: stdin)");
  tg->add_option("--rules", tg_rules, "rule file, 'default', or 'none'");
  tg->add_option("--model", tg_model, "trained model file");
  tg->add_option("--format", tg_format, "output format: json|bio");
  tg->add_flag("--no-expand", tg_no_expand, "skip clause restructuring");

  // train
  std::string tr_corpus, tr_format = "bio", tr_out, tr_validation;
  TrainingConfig tr_cfg;
  tr_cfg.seed = cfg.seed;
  bool tr_full_batch = false;
  auto* tr = app.add_subcommand("train", "Train the feature CRF tagger");
  tr->add_option("--corpus", tr_corpus, "training corpus")->required();
  tr->add_option("--format", tr_format, "corpus format: bio|json");
  tr->add_option("--out", tr_out, "output model file")->required();
  tr->add_option("--validation", tr_validation, "validation corpus");
  tr->add_option("--epochs", tr_cfg.epochs, "training epochs");
  tr->add_option("--lr", tr_cfg.learning_rate, "learning rate");
  tr->add_option("--l2", tr_cfg.l2, "L2 regularization strength");
  tr->add_option("--seed", tr_cfg.seed, "shuffle seed");
  tr->add_flag("--full-batch", tr_full_batch,
               "full-batch gradient ascent instead of per-sentence SGD");

  // eval
  std::string ev_pred, ev_pred_format = "bio", ev_gold, ev_gold_format = "bio",
              ev_level = "span", ev_out = "text", ev_name = "Predictions";
  auto* ev = app.add_subcommand("eval", "Score predictions against gold");
  ev->add_option("--pred", ev_pred, "prediction file")->required();
  ev->add_option("--pred-format", ev_pred_format, "prediction format: bio|json");
  ev->add_option("--gold", ev_gold, "gold corpus file")->required();
  ev->add_option("--gold-format", ev_gold_format, "gold format: bio|json");
  ev->add_option("--level", ev_level, "match level: span|token");
  ev->add_option("--output", ev_out, "output style: text|json|csv");
  ev->add_option("--name", ev_name, "system name in the text report");

  // graph
  std::string gr_input;
  bool gr_dot = false;
  auto* gr = app.add_subcommand("graph", "Compile tagged spans into graphs");
  gr->add_option("--input", gr_input, "input file (default: stdin)");
  gr->add_flag("--dot", gr_dot, "emit Graphviz DOT instead of JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 1;
  }

  try {
    if (st->parsed()) return cmd_stats(st_corpus, st_format, st_json);
    if (cv->parsed()) return cmd_convert(cv_input, cv_from, cv_to, cv_quarantine);
    if (ex->parsed()) return cmd_expand(ex_input, ex_trace);
    if (tg->parsed()) {
      AppConfig run = cfg;
      run.rules = tg_rules;
      run.model = tg_model;
      run.format = tg_format;
      run.no_expand = tg_no_expand;
      return cmd_tag(run, tg_input, tg_format);
    }
    if (tr->parsed()) {
      tr_cfg.shuffle = !tr_full_batch;
      return cmd_train(tr_corpus, tr_format, tr_out, tr_validation, tr_cfg);
    }
    if (ev->parsed())
      return cmd_eval(ev_pred, ev_pred_format, ev_gold, ev_gold_format,
                      ev_level, ev_out, ev_name);
    if (gr->parsed()) return cmd_graph(gr_input, gr_dot);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
