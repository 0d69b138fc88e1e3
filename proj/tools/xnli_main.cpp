#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xnli/core.hpp"
#include "xnli/error.hpp"
#include "xnli/eval.hpp"
#include "xnli/ingest.hpp"
#include "xnli/nli.hpp"
#include "xnli/numkit.hpp"
#include "xnli/xembed.hpp"

// Command-line front end. Conventions:
//   - exit 0 on success, 2 on usage errors (with help text), 1 on runtime
//     errors (one-line diagnostic on stderr naming the offending input);
//   - every run prints its resolved configuration to stderr as "# key = value"
//     lines, so primary artifacts on stdout and disk stay clean;
//   - one global --seed; each component draws its stream from
//     splitmix64(seed XOR fnv1a64(component-name)), so adding a component
//     never shifts another's randomness;
//   - --config FILE reads flat "key = value" lines (keys are the
//     subcommand's flag names); command-line flags win.

namespace {

using namespace xnli;
namespace fs = std::filesystem;
using numkit::Rng;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void note(std::string_view key, std::string_view value) {
  std::cerr << "# " << key << " = " << value << '\n';
}

void note_path(std::string_view key, const fs::path& value) {
  note(key, value.string());
}

void note_num(std::string_view key, double value) {
  note(key, ingest::format_double(value));
}

void note_count(std::string_view key, std::uint64_t value) {
  note(key, std::to_string(value));
}

void note_flag(std::string_view key, bool value) { note(key, value ? "true" : "false"); }

struct Globals {
  std::uint64_t seed = 0;
  bool deterministic = true;
  unsigned workers = 1;
  std::string config_file;  // consumed before parsing; kept for --help
};

void add_globals(CLI::App& cmd, Globals& g) {
  cmd.add_option("--seed", g.seed,
                 "Global random seed; component streams derive from it")
      ->capture_default_str();
  cmd.add_flag("--deterministic,!--no-deterministic", g.deterministic,
               "Single-threaded deterministic mode")
      ->capture_default_str();
  cmd.add_option("--workers", g.workers,
                 "Worker count; deterministic mode pins effective parallelism to 1")
      ->capture_default_str();
  cmd.add_option("--config", g.config_file,
                 "Flat 'key = value' file of this subcommand's flags; "
                 "command-line flags override");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

// One "key = value" line per setting, keys named after the subcommand's
// flags; '#' and ';' start comments. Keys already given on the command line
// are skipped, so flags override the file. Expanded settings are appended as
// ordinary arguments, so unknown keys fail parsing like any stray flag would.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
      path = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file: " + path);
  const auto covered = [&args](const std::string& key) {
    const std::string plain = "--" + key, negated = "--no-" + key;
    for (const auto& a : args)
      if (a == plain || a == negated || a.rfind(plain + "=", 0) == 0 ||
          a.rfind(negated + "=", 0) == 0)
        return true;
    return false;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#' || entry[0] == ';') continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected 'key = value'");
    const std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    if (key.empty())
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    if (key == "config")
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": config files cannot nest");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (covered(key)) continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

void note_globals(const Globals& g) {
  note_count("seed", g.seed);
  note_flag("deterministic", g.deterministic);
  note_count("workers", g.workers);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

void emit(const fs::path& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text(out_path, content);
}

// Empty string = no prefixing; used by the shared-space data flags.
void prefix_examples(std::vector<NliExample>& examples, const std::string& lang) {
  if (lang.empty()) return;
  const LangTag tag(lang);
  for (auto& ex : examples) {
    ex.premise = prefix_tokens(tag, ex.premise);
    ex.hypothesis = prefix_tokens(tag, ex.hypothesis);
  }
}

std::string resolve_lang(std::string value, const std::string& fallback) {
  if (value.empty()) value = fallback;
  return value == "none" ? std::string() : value;
}

// ---- embed ----

struct EmbedOpts {
  std::string method;
  fs::path src, tgt, out, merged_out;
  std::string src_lang = "eng", tgt_lang = "fra";
  xembed::SgnsConfig sgns;
  double sigma_power = 0.5;
  std::string weighting = "binary";
  xembed::BicvmConfig bicvm;
  fs::path src_embeddings, tgt_embeddings, dict;
};

CLI::App* add_embed(CLI::App& app, EmbedOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand(
      "embed", "Build a shared cross-lingual embedding space from parallel text");
  add_globals(*cmd, g);
  cmd->add_option("--method", o.method,
                  "Construction method: map, random, ratio, invert, bicvm")
      ->required()
      ->check(CLI::IsMember({"map", "random", "ratio", "invert", "bicvm"}));
  cmd->add_option("--src", o.src, "Source-side sentences, one per line");
  cmd->add_option("--tgt", o.tgt, "Target-side sentences, aligned line by line");
  cmd->add_option("--src-lang", o.src_lang, "Source language tag (token prefix)")
      ->capture_default_str();
  cmd->add_option("--tgt-lang", o.tgt_lang, "Target language tag (token prefix)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output embedding file")->required();
  cmd->add_option("--merged-out", o.merged_out,
                  "Also write the merged training corpus (random/ratio)");
  cmd->add_option("--dim", o.sgns.dim, "Vector width (SVD rank for invert)")
      ->capture_default_str();
  cmd->add_option("--window", o.sgns.window, "Skip-gram window")->capture_default_str();
  cmd->add_option("--negatives", o.sgns.negatives, "Negative samples per pair")
      ->capture_default_str();
  cmd->add_option("--epochs", o.sgns.epochs, "Training epochs (random/ratio/bicvm)")
      ->capture_default_str();
  cmd->add_option("--lr", o.sgns.learning_rate, "Initial learning rate (random/ratio)")
      ->capture_default_str();
  cmd->add_option("--min-count", o.sgns.min_count, "Drop rarer tokens (random/ratio)")
      ->capture_default_str();
  cmd->add_option("--subsample", o.sgns.subsample,
                  "Frequent-token subsampling threshold, 0 = off (random/ratio)")
      ->capture_default_str();
  cmd->add_option("--weighting", o.weighting, "invert: binary or count")
      ->check(CLI::IsMember({"binary", "count"}))
      ->capture_default_str();
  cmd->add_option("--sigma-power", o.sigma_power,
                  "invert: singular-value scaling exponent")
      ->capture_default_str();
  cmd->add_option("--margin", o.bicvm.margin, "bicvm: hinge margin")
      ->capture_default_str();
  cmd->add_option("--l2", o.bicvm.l2, "bicvm: L2 strength")->capture_default_str();
  cmd->add_option("--bicvm-lr", o.bicvm.learning_rate, "bicvm: learning rate")
      ->capture_default_str();
  cmd->add_option("--src-embeddings", o.src_embeddings,
                  "map: pre-trained source-language vectors");
  cmd->add_option("--tgt-embeddings", o.tgt_embeddings,
                  "map: pre-trained target-language vectors");
  cmd->add_option("--dict", o.dict,
                  "map: dictionary TSV, source word TAB target word");
  return cmd;
}

void run_embed(const EmbedOpts& o, const Globals& g) {
  note("command", "embed");
  note_globals(g);
  note("method", o.method);
  note("src-lang", o.src_lang);
  note("tgt-lang", o.tgt_lang);
  note_path("out", o.out);

  if (o.method == "map") {
    if (o.src_embeddings.empty() || o.tgt_embeddings.empty() || o.dict.empty())
      throw UsageError(
          "embed --method map needs --src-embeddings, --tgt-embeddings, and --dict");
    note_path("src-embeddings", o.src_embeddings);
    note_path("tgt-embeddings", o.tgt_embeddings);
    note_path("dict", o.dict);
    const auto src_space = ingest::read_embeddings(o.src_embeddings);
    const auto tgt_space = ingest::read_embeddings(o.tgt_embeddings);
    const auto dict = ingest::read_dictionary(o.dict);
    const LangTag src_tag(o.src_lang), tgt_tag(o.tgt_lang);
    const auto fit =
        xembed::fit_translation_matrix(tgt_space, src_space, dict, tgt_tag, src_tag);
    note_count("dictionary-pairs-used", fit.pairs_used);
    note_flag("ridge-fallback", fit.ridge_fallback);
    const auto mapped = xembed::apply_map(fit.map, tgt_space);

    EmbeddingSpace shared;
    shared.matrix =
        numkit::Matrix(src_space.vocab.size() + mapped.vocab.size(), src_space.dim());
    for (std::size_t i = 0; i < src_space.vocab.size(); ++i) {
      const std::size_t row =
          shared.vocab.add(prefix_token(src_tag, src_space.vocab.token_of(i)));
      const auto v = src_space.vector_of(i);
      std::copy(v.begin(), v.end(), shared.matrix.row(row).begin());
    }
    for (std::size_t i = 0; i < mapped.vocab.size(); ++i) {
      const std::size_t row =
          shared.vocab.add(prefix_token(tgt_tag, mapped.vocab.token_of(i)));
      const auto v = mapped.vector_of(i);
      std::copy(v.begin(), v.end(), shared.matrix.row(row).begin());
    }
    ingest::write_embeddings(shared, o.out);
    return;
  }

  if (o.src.empty() || o.tgt.empty())
    throw UsageError("embed --method " + o.method + " needs --src and --tgt");
  note_path("src", o.src);
  note_path("tgt", o.tgt);
  const auto corpus = ingest::read_parallel(o.src, o.tgt, LangTag(o.src_lang),
                                            LangTag(o.tgt_lang));
  note_count("parallel-pairs", corpus.pairs.size());

  EmbeddingSpace space;
  if (o.method == "random" || o.method == "ratio") {
    xembed::SgnsConfig cfg = o.sgns;
    cfg.seed = Rng::derive(g.seed, "sgns");
    note_count("sgns-seed", cfg.seed);
    note_count("dim", cfg.dim);
    note_count("window", cfg.window);
    note_count("epochs", cfg.epochs);
    xembed::MergedCorpus merged;
    xembed::MergedCorpus* merged_out = o.merged_out.empty() ? nullptr : &merged;
    space = o.method == "random" ? xembed::embed_random(corpus, cfg, merged_out).space
                                 : xembed::embed_ratio(corpus, cfg, merged_out).space;
    if (!o.merged_out.empty()) {
      xembed::write_merged(merged, o.merged_out);
      note_path("merged-out", o.merged_out);
    }
  } else if (o.method == "invert") {
    xembed::InvertConfig cfg;
    cfg.rank = o.sgns.dim;
    cfg.weighting = o.weighting == "count" ? xembed::InvertWeighting::count
                                           : xembed::InvertWeighting::binary;
    cfg.sigma_power = o.sigma_power;
    cfg.seed = Rng::derive(g.seed, "invert");
    note_count("invert-seed", cfg.seed);
    note_count("rank", cfg.rank);
    note("weighting", o.weighting);
    note_num("sigma-power", cfg.sigma_power);
    const auto index =
        xembed::build_inverted_index(std::span(&corpus, 1), cfg.weighting);
    space = xembed::embed_invert(index, cfg);
  } else {  // bicvm
    xembed::BicvmConfig cfg = o.bicvm;
    cfg.dim = o.sgns.dim;
    cfg.epochs = o.sgns.epochs;
    cfg.seed = Rng::derive(g.seed, "bicvm");
    note_count("bicvm-seed", cfg.seed);
    note_count("dim", cfg.dim);
    note_count("epochs", cfg.epochs);
    note_num("margin", cfg.margin);
    space = xembed::train_bicvm(corpus, cfg).space;
  }
  ingest::write_embeddings(space, o.out);
}

// ---- train-nli ----

struct TrainOpts {
  fs::path train, embeddings, out, tuned_out;
  std::string lang;
  nli::TrainConfig cfg;
  std::string optimizer = "adagrad";
  bool tune_embeddings = false;
};

CLI::App* add_train(CLI::App& app, TrainOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand("train-nli",
                                 "Train the attention classifier on labeled pairs");
  add_globals(*cmd, g);
  cmd->add_option("--train", o.train, "Training pairs TSV: gold, premise, hypothesis")
      ->required();
  cmd->add_option("--embeddings", o.embeddings, "Embedding text file")->required();
  cmd->add_option("--out", o.out, "Output model file")->required();
  cmd->add_option("--lang", o.lang,
                  "Prefix tokens with this language tag before lookup")
      ->capture_default_str();
  cmd->add_option("--epochs", o.cfg.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", o.cfg.batch_size, "Minibatch size")->capture_default_str();
  cmd->add_option("--hidden", o.cfg.hidden, "Hidden width")->capture_default_str();
  cmd->add_option("--dropout", o.cfg.dropout, "Dropout rate inside feed-forward nets")
      ->capture_default_str();
  cmd->add_option("--lr", o.cfg.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer, "sgd or adagrad")
      ->check(CLI::IsMember({"sgd", "adagrad"}))
      ->capture_default_str();
  cmd->add_flag("--tune-embeddings", o.tune_embeddings,
                "Update embeddings during training instead of freezing them");
  cmd->add_option("--tuned-embeddings-out", o.tuned_out,
                  "Where to write tuned embeddings (with --tune-embeddings)");
  return cmd;
}

void run_train(const TrainOpts& o, const Globals& g) {
  note("command", "train-nli");
  note_globals(g);
  note_path("train", o.train);
  note_path("embeddings", o.embeddings);
  note_path("out", o.out);
  note("lang", o.lang.empty() ? "none" : o.lang);

  nli::TrainConfig cfg = o.cfg;
  cfg.optimizer = o.optimizer == "sgd" ? numkit::OptKind::sgd : numkit::OptKind::adagrad;
  cfg.seed = Rng::derive(g.seed, "nli");
  cfg.freeze_embeddings = !o.tune_embeddings;
  note_count("nli-seed", cfg.seed);
  note_count("epochs", cfg.epochs);
  note_count("batch", cfg.batch_size);
  note_count("hidden", cfg.hidden);
  note_num("dropout", cfg.dropout);
  note_num("lr", cfg.learning_rate);
  note("optimizer", o.optimizer);
  note_flag("tune-embeddings", o.tune_embeddings);

  ingest::SnliReadStats stats;
  auto examples = ingest::read_snli(o.train, {}, &stats);
  note_count("examples", examples.size());
  note_count("skipped-no-consensus", stats.skipped_no_consensus);
  note_count("skipped-empty", stats.skipped_empty);
  prefix_examples(examples, o.lang);

  const auto space = ingest::read_embeddings(o.embeddings);
  const auto result = nli::train_nli(examples, space, cfg);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e)
    note_num("epoch-" + std::to_string(e + 1) + "-loss", result.epoch_losses[e]);
  nli::save_model(result.model, o.out);
  if (result.tuned_embeddings && !o.tuned_out.empty()) {
    ingest::write_embeddings(*result.tuned_embeddings, o.tuned_out);
    note_path("tuned-embeddings-out", o.tuned_out);
  }
}

// ---- predict ----

struct PredictOpts {
  fs::path model, embeddings, input, out;
  std::string lang, premise, hypothesis;
};

CLI::App* add_predict(CLI::App& app, PredictOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand("predict", "Label premise/hypothesis pairs");
  add_globals(*cmd, g);
  cmd->add_option("--model", o.model, "Trained model file")->required();
  cmd->add_option("--embeddings", o.embeddings, "Embedding text file")->required();
  cmd->add_option("--input", o.input,
                  "Pairs file: premise TAB hypothesis (a leading gold column is "
                  "allowed and ignored)");
  cmd->add_option("--premise", o.premise, "Single premise sentence");
  cmd->add_option("--hypothesis", o.hypothesis, "Single hypothesis sentence");
  cmd->add_option("--lang", o.lang,
                  "Prefix tokens with this language tag before lookup")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
  return cmd;
}

void run_predict(const PredictOpts& o, const Globals& g) {
  note("command", "predict");
  note_globals(g);
  note_path("model", o.model);
  note_path("embeddings", o.embeddings);
  note("lang", o.lang.empty() ? "none" : o.lang);

  const bool single = !o.premise.empty() || !o.hypothesis.empty();
  if (single == !o.input.empty())
    throw UsageError("predict needs either --input or --premise/--hypothesis");
  if (single && (o.premise.empty() || o.hypothesis.empty()))
    throw UsageError("predict needs both --premise and --hypothesis");

  const auto model = nli::load_model(o.model);
  const auto space = ingest::read_embeddings(o.embeddings);

  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  if (single) {
    pairs.emplace_back(ingest::tokenize(o.premise), ingest::tokenize(o.hypothesis));
  } else {
    note_path("input", o.input);
    const auto lines = read_lines(o.input);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto fields = split_tabs(lines[i]);
      std::string s1, s2;
      if (fields.size() == 3) {
        s1 = fields[1];
        s2 = fields[2];
      } else if (fields.size() == 2) {
        s1 = fields[0];
        s2 = fields[1];
      } else {
        throw MalformedRow(o.input.string() + ":" + std::to_string(i + 1) +
                           ": expected 2 or 3 tab-separated fields");
      }
      pairs.emplace_back(ingest::tokenize(s1), ingest::tokenize(s2));
    }
  }

  std::string out;
  for (auto& [premise, hypothesis] : pairs) {
    if (!o.lang.empty()) {
      const LangTag tag(o.lang);
      premise = prefix_tokens(tag, premise);
      hypothesis = prefix_tokens(tag, hypothesis);
    }
    const auto pred = nli::predict(model, space, premise, hypothesis);
    out += render_label(pred.label);
    for (double p : pred.probabilities) {
      out += '\t';
      out += ingest::format_double(p);
    }
    out += '\n';
  }
  emit(o.out, out);
}

// ---- evaluate ----

struct EvaluateOpts {
  fs::path model, embeddings, test, out;
  std::string lang;
};

CLI::App* add_evaluate(CLI::App& app, EvaluateOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand("evaluate", "Score a model on labeled pairs");
  add_globals(*cmd, g);
  cmd->add_option("--model", o.model, "Trained model file")->required();
  cmd->add_option("--embeddings", o.embeddings, "Embedding text file")->required();
  cmd->add_option("--test", o.test, "Test pairs TSV: gold, premise, hypothesis")
      ->required();
  cmd->add_option("--lang", o.lang,
                  "Prefix tokens with this language tag before lookup")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Write the machine-readable TSV report here");
  return cmd;
}

void run_evaluate(const EvaluateOpts& o, const Globals& g) {
  note("command", "evaluate");
  note_globals(g);
  note_path("model", o.model);
  note_path("embeddings", o.embeddings);
  note_path("test", o.test);
  note("lang", o.lang.empty() ? "none" : o.lang);

  const auto model = nli::load_model(o.model);
  const auto space = ingest::read_embeddings(o.embeddings);
  ingest::SnliReadStats stats;
  auto examples = ingest::read_snli(o.test, {}, &stats);
  note_count("examples", examples.size());
  note_count("skipped-no-consensus", stats.skipped_no_consensus);
  note_count("skipped-empty", stats.skipped_empty);
  prefix_examples(examples, o.lang);

  const auto report = eval::evaluate_system(model, space, examples);
  std::cout << eval::render_report(report);
  if (!o.out.empty()) {
    write_text(o.out, eval::report_tsv(report));
    note_path("out", o.out);
  }
}

// ---- learning-curve ----

struct CurveOpts {
  fs::path src, tgt, train, test, out;
  std::string src_lang = "eng", tgt_lang = "fra";
  std::string train_lang, test_lang;  // default: src-lang / tgt-lang
  std::string method = "random";
  std::vector<std::size_t> sizes;
  xembed::SgnsConfig sgns;
  std::string weighting = "binary";
  double sigma_power = 0.5;
  xembed::BicvmConfig bicvm;
  nli::TrainConfig train_cfg;
  std::string optimizer = "adagrad";
  bool subsample = false;
};

CLI::App* add_curve(CLI::App& app, CurveOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand(
      "learning-curve", "Accuracy as a function of parallel-corpus size");
  add_globals(*cmd, g);
  cmd->add_option("--src", o.src, "Source-side sentences, one per line")->required();
  cmd->add_option("--tgt", o.tgt, "Target-side sentences, aligned line by line")
      ->required();
  cmd->add_option("--src-lang", o.src_lang, "Source language tag")
      ->capture_default_str();
  cmd->add_option("--tgt-lang", o.tgt_lang, "Target language tag")
      ->capture_default_str();
  cmd->add_option("--train", o.train, "Training pairs TSV (source language)")
      ->required();
  cmd->add_option("--test", o.test, "Test pairs TSV (target language)")->required();
  cmd->add_option("--train-lang", o.train_lang,
                  "Prefix for training tokens (default: --src-lang; 'none' disables)");
  cmd->add_option("--test-lang", o.test_lang,
                  "Prefix for test tokens (default: --tgt-lang; 'none' disables)");
  cmd->add_option("--sizes", o.sizes, "Ascending parallel-pair counts, e.g. 100,1000")
      ->required()
      ->delimiter(',');
  cmd->add_option("--method", o.method, "random, ratio, invert, or bicvm")
      ->check(CLI::IsMember({"random", "ratio", "invert", "bicvm"}))
      ->capture_default_str();
  cmd->add_option("--dim", o.sgns.dim, "Vector width (SVD rank for invert)")
      ->capture_default_str();
  cmd->add_option("--window", o.sgns.window, "Skip-gram window")->capture_default_str();
  cmd->add_option("--negatives", o.sgns.negatives, "Negative samples per pair")
      ->capture_default_str();
  cmd->add_option("--embed-epochs", o.sgns.epochs, "Embedding training epochs")
      ->capture_default_str();
  cmd->add_option("--embed-lr", o.sgns.learning_rate, "Embedding learning rate")
      ->capture_default_str();
  cmd->add_option("--min-count", o.sgns.min_count, "Drop rarer tokens")
      ->capture_default_str();
  cmd->add_option("--weighting", o.weighting, "invert: binary or count")
      ->check(CLI::IsMember({"binary", "count"}))
      ->capture_default_str();
  cmd->add_option("--sigma-power", o.sigma_power,
                  "invert: singular-value scaling exponent")
      ->capture_default_str();
  cmd->add_option("--margin", o.bicvm.margin, "bicvm: hinge margin")
      ->capture_default_str();
  cmd->add_option("--l2", o.bicvm.l2, "bicvm: L2 strength")->capture_default_str();
  cmd->add_option("--hidden", o.train_cfg.hidden, "Classifier hidden width")
      ->capture_default_str();
  cmd->add_option("--batch", o.train_cfg.batch_size, "Classifier minibatch size")
      ->capture_default_str();
  cmd->add_option("--dropout", o.train_cfg.dropout, "Classifier dropout")
      ->capture_default_str();
  cmd->add_option("--nli-epochs", o.train_cfg.epochs, "Classifier training epochs")
      ->capture_default_str();
  cmd->add_option("--nli-lr", o.train_cfg.learning_rate, "Classifier learning rate")
      ->capture_default_str();
  cmd->add_option("--optimizer", o.optimizer, "sgd or adagrad")
      ->check(CLI::IsMember({"sgd", "adagrad"}))
      ->capture_default_str();
  cmd->add_flag("--subsample-pairs", o.subsample,
                "Sample each size randomly instead of taking corpus prefixes");
  cmd->add_option("--out", o.out, "Write the two-column TSV curve here");
  return cmd;
}

void run_curve(const CurveOpts& o, const Globals& g) {
  note("command", "learning-curve");
  note_globals(g);
  note_path("src", o.src);
  note_path("tgt", o.tgt);
  note_path("train", o.train);
  note_path("test", o.test);
  note("method", o.method);

  eval::LearningCurveConfig cfg;
  cfg.method = o.method == "random"   ? eval::CurveMethod::random
               : o.method == "ratio"  ? eval::CurveMethod::ratio
               : o.method == "invert" ? eval::CurveMethod::invert
                                      : eval::CurveMethod::bicvm;
  cfg.sgns = o.sgns;
  cfg.sgns.seed = Rng::derive(g.seed, "sgns");
  cfg.invert.rank = o.sgns.dim;
  cfg.invert.weighting = o.weighting == "count" ? xembed::InvertWeighting::count
                                                : xembed::InvertWeighting::binary;
  cfg.invert.sigma_power = o.sigma_power;
  cfg.invert.seed = Rng::derive(g.seed, "invert");
  cfg.bicvm = o.bicvm;
  cfg.bicvm.dim = o.sgns.dim;
  cfg.bicvm.epochs = o.sgns.epochs;
  cfg.bicvm.seed = Rng::derive(g.seed, "bicvm");
  cfg.train = o.train_cfg;
  cfg.train.optimizer =
      o.optimizer == "sgd" ? numkit::OptKind::sgd : numkit::OptKind::adagrad;
  cfg.train.seed = Rng::derive(g.seed, "nli");
  cfg.subsample = o.subsample;
  cfg.subsample_seed = Rng::derive(g.seed, "subsample");
  note_count("sgns-seed", cfg.sgns.seed);
  note_count("nli-seed", cfg.train.seed);
  note_flag("subsample-pairs", cfg.subsample);
  {
    std::string sizes_text;
    for (std::size_t i = 0; i < o.sizes.size(); ++i) {
      if (i) sizes_text += ',';
      sizes_text += std::to_string(o.sizes[i]);
    }
    note("sizes", sizes_text);
  }

  const auto corpus = ingest::read_parallel(o.src, o.tgt, LangTag(o.src_lang),
                                            LangTag(o.tgt_lang));
  note_count("parallel-pairs", corpus.pairs.size());
  auto train = ingest::read_snli(o.train);
  auto test = ingest::read_snli(o.test);
  const std::string train_lang = resolve_lang(o.train_lang, o.src_lang);
  const std::string test_lang = resolve_lang(o.test_lang, o.tgt_lang);
  note("train-lang", train_lang.empty() ? "none" : train_lang);
  note("test-lang", test_lang.empty() ? "none" : test_lang);
  prefix_examples(train, train_lang);
  prefix_examples(test, test_lang);

  const auto points = eval::learning_curve(corpus, o.sizes, train, test, cfg);
  std::cout << eval::render_curve(points);
  if (!o.out.empty()) {
    write_text(o.out, eval::curve_tsv(points));
    note_path("out", o.out);
  }
}

// ---- bleu ----

struct BleuOpts {
  fs::path hyp, ref, out;
  std::size_t max_n = 4;
};

CLI::App* add_bleu(CLI::App& app, BleuOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand("bleu", "Corpus BLEU of line-aligned text files");
  add_globals(*cmd, g);
  cmd->add_option("--hyp", o.hyp, "Hypothesis sentences, one per line")->required();
  cmd->add_option("--ref", o.ref, "Reference sentences, aligned line by line")
      ->required();
  cmd->add_option("--max-n", o.max_n, "Highest n-gram order")->capture_default_str();
  cmd->add_option("--out", o.out, "Write the TSV report here");
  return cmd;
}

void run_bleu(const BleuOpts& o, const Globals& g) {
  note("command", "bleu");
  note_globals(g);
  note_path("hyp", o.hyp);
  note_path("ref", o.ref);
  note_count("max-n", o.max_n);

  const auto tokenize_lines = [](const fs::path& path) {
    std::vector<std::vector<std::string>> out;
    for (const auto& line : read_lines(path)) out.push_back(ingest::tokenize(line));
    return out;
  };
  const auto report = eval::bleu(tokenize_lines(o.hyp), tokenize_lines(o.ref), o.max_n);
  std::cout << eval::render_bleu(report);
  if (!o.out.empty()) {
    write_text(o.out, eval::bleu_tsv(report));
    note_path("out", o.out);
  }
}

// ---- tokenize ----

struct TokenizeOpts {
  fs::path input, out;
  std::string lang;
  bool keep_case = false;
  bool keep_punctuation = false;
};

CLI::App* add_tokenize(CLI::App& app, TokenizeOpts& o, Globals& g) {
  auto* cmd = app.add_subcommand("tokenize", "Tokenize text, one sentence per line");
  add_globals(*cmd, g);
  cmd->add_option("--input", o.input, "Input text file")->required();
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
  cmd->add_option("--lang", o.lang, "Prefix every token with this language tag")
      ->capture_default_str();
  cmd->add_flag("--keep-case", o.keep_case, "Skip lowercasing");
  cmd->add_flag("--keep-punctuation", o.keep_punctuation,
                "Keep punctuation attached to words");
  return cmd;
}

void run_tokenize(const TokenizeOpts& o, const Globals& g) {
  note("command", "tokenize");
  note_globals(g);
  note_path("input", o.input);
  note("lang", o.lang.empty() ? "none" : o.lang);
  note_flag("keep-case", o.keep_case);
  note_flag("keep-punctuation", o.keep_punctuation);

  ingest::TokenizerConfig cfg;
  cfg.lowercase = !o.keep_case;
  cfg.split_punctuation = !o.keep_punctuation;

  std::string out;
  for (const auto& line : read_lines(o.input)) {
    auto tokens = ingest::tokenize(line, cfg);
    if (!o.lang.empty()) tokens = prefix_tokens(LangTag(o.lang), tokens);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    out += '\n';
  }
  emit(o.out, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xnli: cross-lingual natural-language-inference toolkit"};
  app.name("xnli");
  app.require_subcommand(1);

  Globals globals;
  EmbedOpts embed_opts;
  TrainOpts train_opts;
  PredictOpts predict_opts;
  EvaluateOpts evaluate_opts;
  CurveOpts curve_opts;
  BleuOpts bleu_opts;
  TokenizeOpts tokenize_opts;

  auto* cmd_embed = add_embed(app, embed_opts, globals);
  auto* cmd_train = add_train(app, train_opts, globals);
  auto* cmd_predict = add_predict(app, predict_opts, globals);
  auto* cmd_evaluate = add_evaluate(app, evaluate_opts, globals);
  auto* cmd_curve = add_curve(app, curve_opts, globals);
  auto* cmd_bleu = add_bleu(app, bleu_opts, globals);
  auto* cmd_tokenize = add_tokenize(app, tokenize_opts, globals);

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "xnli: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());  // CLI11's vector overload pops from the back
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);  // one-line error on stderr
    std::cerr << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand(cmd_embed)) run_embed(embed_opts, globals);
    if (app.got_subcommand(cmd_train)) run_train(train_opts, globals);
    if (app.got_subcommand(cmd_predict)) run_predict(predict_opts, globals);
    if (app.got_subcommand(cmd_evaluate)) run_evaluate(evaluate_opts, globals);
    if (app.got_subcommand(cmd_curve)) run_curve(curve_opts, globals);
    if (app.got_subcommand(cmd_bleu)) run_bleu(bleu_opts, globals);
    if (app.got_subcommand(cmd_tokenize)) run_tokenize(tokenize_opts, globals);
  } catch (const UsageError& e) {
    std::cerr << "xnli: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xnli: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
