#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xnli/core.hpp"
#include "xnli/nli.hpp"
#include "xnli/xembed.hpp"

// Metrics and experiment drivers: accuracy, one-vs-rest F1, corpus BLEU,
// whole-system evaluation, learning curves over parallel-corpus prefixes, and
// the manual-vs-machine-translation proxy gap. Metric functions are pure and
// single-threaded; results depend only on their arguments.
namespace xnli::eval {

// 3x3 counts indexed [gold][predicted] in the fixed label order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumLabels>, kNumLabels> counts{};

  std::uint64_t total() const;
  std::uint64_t gold_count(Label label) const;        // row sum
  std::uint64_t prediction_count(Label label) const;  // column sum
};

// Fraction of positions where preds[i] == golds[i].
// Errors: LengthMismatch, EmptyInput.
double accuracy(std::span<const Label> preds, std::span<const Label> golds);

struct LabelScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Report {
  std::array<LabelScore, kNumLabels> per_label{};  // fixed label order
  ConfusionMatrix confusion;
  double micro_f1 = 0.0;  // equals accuracy for single-label multiclass
};

// One-vs-rest precision/recall/F1 per label. Zero-denominator convention:
// precision or recall with an empty denominator is 0, and F1 is 0 whenever
// precision + recall is 0. Errors: LengthMismatch, EmptyInput.
F1Report per_label_f1(std::span<const Label> preds, std::span<const Label> golds);

struct BleuReport {
  std::vector<double> precisions;  // modified n-gram precision, order 1..max_n
  double brevity_penalty = 1.0;
  double bleu = 0.0;  // in [0, 100]
  std::uint64_t hypothesis_length = 0;
  std::uint64_t reference_length = 0;
};

// Corpus-level single-reference BLEU: clipped modified n-gram precisions for
// orders 1..max_n, geometric mean with uniform weights, brevity penalty
// exp(1 - r/h) when h <= r else 1, no smoothing, scaled to [0, 100]. Any
// zero precision (including an order with no n-grams at all) zeroes the
// score. Errors: LengthMismatch, EmptyInput.
BleuReport bleu(std::span<const std::vector<std::string>> hypotheses,
                std::span<const std::vector<std::string>> references,
                std::size_t max_n = 4);

struct SystemReport {
  double accuracy = 0.0;
  F1Report f1;
  double oov_rate = 0.0;  // OOV tokens / total tokens over the test set
  std::uint64_t example_count = 0;
  std::uint64_t token_count = 0;
  std::uint64_t oov_tokens = 0;
  std::vector<Label> predictions;  // one per test example, in input order
};

// Runs predict on every example and aggregates. Errors: EmptyInput.
SystemReport evaluate_system(const nli::NliModel& model,
                             const EmbeddingSpace& embeddings,
                             std::span<const NliExample> test);

struct CurvePoint {
  std::size_t pair_count = 0;
  double accuracy = 0.0;
};

// Which embedding builder the learning curve exercises. The translation-map
// method is not corpus-prefix-driven (it needs two pre-trained monolingual
// spaces plus a dictionary), so it has no curve mode.
enum class CurveMethod { random, ratio, invert, bicvm };

struct LearningCurveConfig {
  CurveMethod method = CurveMethod::random;
  xembed::SgnsConfig sgns;      // random / ratio
  xembed::InvertConfig invert;  // invert
  xembed::BicvmConfig bicvm;    // bicvm
  nli::TrainConfig train;
  // Prefixes of the corpus by default (deterministic); opt into seeded
  // subsampling for robustness studies.
  bool subsample = false;
  std::uint64_t subsample_seed = 0;
};

// For each size s (ascending, 1 <= s <= corpus size): build embeddings from
// the first s parallel pairs (or a seeded subsample of s), train the
// classifier, evaluate on `test`. Errors: EmptySizes, SizeOutOfRange (also
// used when sizes are not ascending).
std::vector<CurvePoint> learning_curve(const ParallelCorpus& parallel,
                                       std::span<const std::size_t> sizes,
                                       std::span<const NliExample> train,
                                       std::span<const NliExample> test,
                                       const LearningCurveConfig& cfg);

// Signed difference (machine-translated minus manual) in absolute percentage
// points: 100 * (acc_machine_translated - acc_manual).
// Errors: OutOfRange unless both accuracies are in [0, 1].
double proxy_gap(double acc_manual, double acc_machine_translated);

// --- report rendering ---
// TSV renderers use the toolkit float grammar (full precision, locale-free);
// plain-text renderers use fixed four-decimal columns. Both are byte-stable
// for equal inputs.

std::string report_tsv(const SystemReport& report);
std::string render_report(const SystemReport& report);
std::string bleu_tsv(const BleuReport& report);
std::string render_bleu(const BleuReport& report);
std::string curve_tsv(std::span<const CurvePoint> points);
std::string render_curve(std::span<const CurvePoint> points);

}  // namespace xnli::eval
