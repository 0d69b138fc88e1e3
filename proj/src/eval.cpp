#include "xnli/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "xnli/error.hpp"
#include "xnli/ingest.hpp"
#include "xnli/numkit.hpp"

namespace xnli::eval {

namespace {

void check_pair_lists(std::size_t preds, std::size_t golds, const char* what) {
  if (preds != golds)
    throw LengthMismatch(std::string(what) + ": prediction and gold counts disagree");
  if (preds == 0) throw EmptyInput(std::string(what) + ": nothing to score");
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (std::uint64_t c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::gold_count(Label label) const {
  const auto& row = counts[static_cast<std::size_t>(label)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::prediction_count(Label label) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[static_cast<std::size_t>(label)];
  return t;
}

double accuracy(std::span<const Label> preds, std::span<const Label> golds) {
  check_pair_lists(preds.size(), golds.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

F1Report per_label_f1(std::span<const Label> preds, std::span<const Label> golds) {
  check_pair_lists(preds.size(), golds.size(), "per_label_f1");
  F1Report report;
  for (std::size_t i = 0; i < preds.size(); ++i)
    ++report.confusion.counts[static_cast<std::size_t>(golds[i])]
                             [static_cast<std::size_t>(preds[i])];

  std::uint64_t true_positives = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const std::uint64_t tp = report.confusion.counts[c][c];
    true_positives += tp;
    const std::uint64_t predicted =
        report.confusion.prediction_count(static_cast<Label>(c));
    const std::uint64_t gold = report.confusion.gold_count(static_cast<Label>(c));
    LabelScore& score = report.per_label[c];
    score.precision =
        predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
    score.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
    score.f1 = score.precision + score.recall == 0.0
                   ? 0.0
                   : 2.0 * score.precision * score.recall /
                         (score.precision + score.recall);
  }
  // Micro precision and recall coincide when every example carries exactly
  // one gold and one predicted label, so micro-F1 is plain accuracy.
  report.micro_f1 =
      static_cast<double>(true_positives) / static_cast<double>(preds.size());
  return report;
}

namespace {

// n-grams as separator-joined keys; '\x1f' cannot appear in tokens read by
// the tokenizer (it splits on control whitespace only, but a literal 0x1f
// would simply make a longer, still-unambiguous key).
std::unordered_map<std::string, std::uint64_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::unordered_map<std::string, std::uint64_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuReport bleu(std::span<const std::vector<std::string>> hypotheses,
                std::span<const std::vector<std::string>> references,
                std::size_t max_n) {
  if (hypotheses.size() != references.size())
    throw LengthMismatch("bleu: hypothesis and reference counts disagree");
  if (hypotheses.empty()) throw EmptyInput("bleu: nothing to score");
  if (max_n < 1) throw EmptyInput("bleu: max_n must be >= 1");

  BleuReport report;
  report.precisions.assign(max_n, 0.0);
  std::vector<std::uint64_t> clipped(max_n, 0), total(max_n, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    report.hypothesis_length += hyp.size();
    report.reference_length += ref.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto hyp_grams = ngram_counts(hyp, n);
      const auto ref_grams = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_grams) {
        const auto it = ref_grams.find(gram);
        const std::uint64_t in_ref = it == ref_grams.end() ? 0 : it->second;
        clipped[n - 1] += std::min(count, in_ref);
      }
      if (hyp.size() >= n) total[n - 1] += hyp.size() - n + 1;
    }
  }

  for (std::size_t n = 0; n < max_n; ++n)
    report.precisions[n] =
        total[n] == 0 ? 0.0
                      : static_cast<double>(clipped[n]) / static_cast<double>(total[n]);

  const double h = static_cast<double>(report.hypothesis_length);
  const double r = static_cast<double>(report.reference_length);
  report.brevity_penalty =
      report.hypothesis_length == 0 || h > r ? 1.0 : std::exp(1.0 - r / h);

  if (std::all_of(report.precisions.begin(), report.precisions.end(),
                  [](double p) { return p > 0.0; })) {
    double log_sum = 0.0;
    for (double p : report.precisions) log_sum += std::log(p);
    report.bleu = 100.0 * report.brevity_penalty *
                  std::exp(log_sum / static_cast<double>(max_n));
  }
  return report;
}

SystemReport evaluate_system(const nli::NliModel& model,
                             const EmbeddingSpace& embeddings,
                             std::span<const NliExample> test) {
  if (test.empty()) throw EmptyInput("evaluate_system: empty test set");
  SystemReport report;
  report.example_count = test.size();
  std::vector<Label> golds;
  golds.reserve(test.size());
  report.predictions.reserve(test.size());
  for (const auto& ex : test) {
    const auto pred = nli::predict(model, embeddings, ex.premise, ex.hypothesis);
    report.predictions.push_back(pred.label);
    golds.push_back(ex.gold);
    report.token_count += pred.token_count;
    report.oov_tokens += pred.oov_count;
  }
  report.accuracy = accuracy(report.predictions, golds);
  report.f1 = per_label_f1(report.predictions, golds);
  report.oov_rate = report.token_count == 0
                        ? 0.0
                        : static_cast<double>(report.oov_tokens) /
                              static_cast<double>(report.token_count);
  return report;
}

std::vector<CurvePoint> learning_curve(const ParallelCorpus& parallel,
                                       std::span<const std::size_t> sizes,
                                       std::span<const NliExample> train,
                                       std::span<const NliExample> test,
                                       const LearningCurveConfig& cfg) {
  if (sizes.empty()) throw EmptySizes("learning_curve: no sizes requested");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1 || sizes[i] > parallel.pairs.size())
      throw SizeOutOfRange("learning_curve: size " + std::to_string(sizes[i]) +
                           " outside 1.." + std::to_string(parallel.pairs.size()));
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw SizeOutOfRange("learning_curve: sizes must be strictly ascending");
  }

  std::vector<CurvePoint> points;
  points.reserve(sizes.size());
  for (const std::size_t size : sizes) {
    ParallelCorpus subset{{}, parallel.src_lang, parallel.tgt_lang};
    if (cfg.subsample) {
      std::vector<std::size_t> index(parallel.pairs.size());
      std::iota(index.begin(), index.end(), 0);
      numkit::Rng rng(numkit::Rng::derive(cfg.subsample_seed,
                                          "curve-" + std::to_string(size)));
      rng.shuffle(index);
      index.resize(size);
      std::sort(index.begin(), index.end());  // keep corpus order within the sample
      for (const std::size_t i : index) subset.pairs.push_back(parallel.pairs[i]);
    } else {
      subset.pairs.assign(parallel.pairs.begin(),
                          parallel.pairs.begin() + static_cast<std::ptrdiff_t>(size));
    }

    EmbeddingSpace space;
    switch (cfg.method) {
      case CurveMethod::random:
        space = xembed::embed_random(subset, cfg.sgns).space;
        break;
      case CurveMethod::ratio:
        space = xembed::embed_ratio(subset, cfg.sgns).space;
        break;
      case CurveMethod::invert: {
        const auto index = xembed::build_inverted_index(std::span(&subset, 1),
                                                        cfg.invert.weighting);
        space = xembed::embed_invert(index, cfg.invert);
        break;
      }
      case CurveMethod::bicvm:
        space = xembed::train_bicvm(subset, cfg.bicvm).space;
        break;
    }

    const auto trained = nli::train_nli(train, space, cfg.train);
    const EmbeddingSpace& eval_space =
        trained.tuned_embeddings ? *trained.tuned_embeddings : space;
    const auto report = evaluate_system(trained.model, eval_space, test);
    points.push_back({size, report.accuracy});
  }
  return points;
}

double proxy_gap(double acc_manual, double acc_machine_translated) {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(acc_manual) || !in_unit(acc_machine_translated))
    throw OutOfRange("proxy_gap: accuracies must lie in [0, 1]");
  return 100.0 * (acc_machine_translated - acc_manual);
}

// --- rendering ---

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void tsv_row(std::string& out, std::string_view key, const std::string& value) {
  out += key;
  out += '\t';
  out += value;
  out += '\n';
}

}  // namespace

std::string report_tsv(const SystemReport& report) {
  std::string out = "metric\tvalue\n";
  tsv_row(out, "examples", std::to_string(report.example_count));
  tsv_row(out, "accuracy", ingest::format_double(report.accuracy));
  tsv_row(out, "micro_f1", ingest::format_double(report.f1.micro_f1));
  tsv_row(out, "oov_rate", ingest::format_double(report.oov_rate));
  tsv_row(out, "oov_tokens", std::to_string(report.oov_tokens));
  tsv_row(out, "tokens", std::to_string(report.token_count));
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const std::string name(render_label(kLabelOrder[c]));
    const auto& s = report.f1.per_label[c];
    tsv_row(out, "precision_" + name, ingest::format_double(s.precision));
    tsv_row(out, "recall_" + name, ingest::format_double(s.recall));
    tsv_row(out, "f1_" + name, ingest::format_double(s.f1));
  }
  for (std::size_t g = 0; g < kNumLabels; ++g)
    for (std::size_t p = 0; p < kNumLabels; ++p)
      tsv_row(out,
              "confusion_" + std::string(render_label(kLabelOrder[g])) + "_" +
                  std::string(render_label(kLabelOrder[p])),
              std::to_string(report.f1.confusion.counts[g][p]));
  return out;
}

std::string render_report(const SystemReport& report) {
  std::ostringstream out;
  out << "examples  " << report.example_count << '\n';
  out << "accuracy  " << fixed4(report.accuracy) << '\n';
  out << "oov rate  " << fixed4(report.oov_rate) << '\n';
  out << '\n';
  out << "label          precision  recall  f1\n";
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    const auto& s = report.f1.per_label[c];
    char line[128];
    std::snprintf(line, sizeof(line), "%-13s  %9.4f  %6.4f  %6.4f\n",
                  std::string(render_label(kLabelOrder[c])).c_str(), s.precision,
                  s.recall, s.f1);
    out << line;
  }
  out << '\n';
  out << "confusion (rows gold, columns predicted)\n";
  out << "               contradiction  entailment  neutral\n";
  for (std::size_t g = 0; g < kNumLabels; ++g) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-13s  %13llu  %10llu  %7llu\n",
                  std::string(render_label(kLabelOrder[g])).c_str(),
                  static_cast<unsigned long long>(report.f1.confusion.counts[g][0]),
                  static_cast<unsigned long long>(report.f1.confusion.counts[g][1]),
                  static_cast<unsigned long long>(report.f1.confusion.counts[g][2]));
    out << line;
  }
  return out.str();
}

std::string bleu_tsv(const BleuReport& report) {
  std::string out = "metric\tvalue\n";
  tsv_row(out, "bleu", ingest::format_double(report.bleu));
  tsv_row(out, "brevity_penalty", ingest::format_double(report.brevity_penalty));
  for (std::size_t n = 0; n < report.precisions.size(); ++n)
    tsv_row(out, "p" + std::to_string(n + 1),
            ingest::format_double(report.precisions[n]));
  tsv_row(out, "hypothesis_length", std::to_string(report.hypothesis_length));
  tsv_row(out, "reference_length", std::to_string(report.reference_length));
  return out;
}

std::string render_bleu(const BleuReport& report) {
  std::ostringstream out;
  out << "BLEU  " << fixed4(report.bleu) << '\n';
  out << "  brevity penalty  " << fixed4(report.brevity_penalty) << '\n';
  for (std::size_t n = 0; n < report.precisions.size(); ++n)
    out << "  p" << n + 1 << "  " << fixed4(report.precisions[n]) << '\n';
  out << "  lengths (hyp/ref)  " << report.hypothesis_length << '/'
      << report.reference_length << '\n';
  return out.str();
}

std::string curve_tsv(std::span<const CurvePoint> points) {
  std::string out = "pairs\taccuracy\n";
  for (const auto& p : points) {
    out += std::to_string(p.pair_count);
    out += '\t';
    out += ingest::format_double(p.accuracy);
    out += '\n';
  }
  return out;
}

std::string render_curve(std::span<const CurvePoint> points) {
  std::ostringstream out;
  out << "pairs      accuracy\n";
  for (const auto& p : points) {
    char line[64];
    std::snprintf(line, sizeof(line), "%-9zu  %.4f\n", p.pair_count, p.accuracy);
    out << line;
  }
  return out.str();
}

}  // namespace xnli::eval
