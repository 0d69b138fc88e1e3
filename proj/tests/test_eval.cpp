#include "xnli/eval.hpp"

#include <cmath>
#include <map>

#include "doctest.h"
#include "testutil.hpp"
#include "xnli/error.hpp"

using namespace xnli;
using numkit::Matrix;
using numkit::Rng;

namespace {

using Sentences = std::vector<std::vector<std::string>>;

std::vector<Label> labels(std::initializer_list<Label> l) { return l; }
constexpr Label kCon = Label::contradiction;
constexpr Label kEnt = Label::entailment;
constexpr Label kNeu = Label::neutral;

// Reference BLEU computed with a different data layout (token-vector keys in
// an ordered map, per-sentence tallies) than the library's string-keyed hash
// counting.
struct BleuOracle {
  std::vector<double> precisions;
  double bp = 1.0;
  double score = 0.0;
};

BleuOracle bleu_oracle(const Sentences& hyps, const Sentences& refs,
                       std::size_t max_n) {
  std::vector<long long> num(max_n, 0), den(max_n, 0);
  long long h_total = 0, r_total = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    h_total += static_cast<long long>(hyps[s].size());
    r_total += static_cast<long long>(refs[s].size());
    for (std::size_t n = 1; n <= max_n; ++n) {
      std::map<std::vector<std::string>, long long> hyp_counts, ref_counts;
      for (std::size_t i = 0; i + n <= hyps[s].size(); ++i)
        ++hyp_counts[{hyps[s].begin() + static_cast<std::ptrdiff_t>(i),
                      hyps[s].begin() + static_cast<std::ptrdiff_t>(i + n)}];
      for (std::size_t i = 0; i + n <= refs[s].size(); ++i)
        ++ref_counts[{refs[s].begin() + static_cast<std::ptrdiff_t>(i),
                      refs[s].begin() + static_cast<std::ptrdiff_t>(i + n)}];
      for (const auto& [gram, count] : hyp_counts) {
        const auto it = ref_counts.find(gram);
        num[n - 1] += std::min(count, it == ref_counts.end() ? 0LL : it->second);
        den[n - 1] += count;
      }
    }
  }
  BleuOracle oracle;
  oracle.precisions.resize(max_n);
  bool all_positive = true;
  for (std::size_t n = 0; n < max_n; ++n) {
    oracle.precisions[n] = den[n] == 0 ? 0.0
                                       : static_cast<double>(num[n]) /
                                             static_cast<double>(den[n]);
    all_positive = all_positive && oracle.precisions[n] > 0.0;
  }
  if (h_total > 0 && h_total <= r_total)
    oracle.bp = std::exp(1.0 - static_cast<double>(r_total) /
                                   static_cast<double>(h_total));
  if (all_positive) {
    double log_sum = 0.0;
    for (double p : oracle.precisions) log_sum += std::log(p);
    oracle.score = 100.0 * oracle.bp * std::exp(log_sum / static_cast<double>(max_n));
  }
  return oracle;
}

// All-zero parameters with valid shapes: scores are uniform, so the argmax
// tie-break always lands on contradiction.
nli::NliModel constant_model(std::size_t d, std::size_t h) {
  nli::NliModel m;
  m.embed_dim = d;
  m.hidden = h;
  m.projection = Matrix(h, d);
  const auto zero_ff = [h](std::size_t in) {
    return nli::FeedForward{Matrix(h, in), std::vector<double>(h, 0.0), Matrix(h, h),
                            std::vector<double>(h, 0.0)};
  };
  m.attend_ff = zero_ff(h);
  m.compare_ff = zero_ff(2 * h);
  m.aggregate_ff = zero_ff(2 * h);
  m.output = Matrix(3, h);
  m.output_bias.assign(3, 0.0);
  return m;
}

EmbeddingSpace small_space(std::size_t n_tokens, std::size_t dim,
                           std::uint64_t seed) {
  EmbeddingSpace space;
  for (std::size_t i = 0; i < n_tokens; ++i) space.vocab.add("t" + std::to_string(i));
  space.matrix = Matrix(n_tokens, dim);
  Rng rng(seed);
  for (double& v : space.matrix.flat()) v = rng.uniform(-1.0, 1.0);
  return space;
}

std::vector<std::string> toks(std::initializer_list<const char*> list) {
  return {list.begin(), list.end()};
}

}  // namespace

TEST_CASE("accuracy counts exact matches") {
  CHECK(eval::accuracy(labels({kEnt, kCon, kNeu}), labels({kEnt, kCon, kNeu})) == 1.0);
  CHECK(eval::accuracy(labels({kEnt, kCon}), labels({kEnt, kNeu})) == 0.5);
  CHECK(eval::accuracy(labels({kNeu, kNeu}), labels({kEnt, kCon})) == 0.0);
}

TEST_CASE("accuracy rejects mismatched and empty inputs") {
  CHECK_THROWS_AS(eval::accuracy(labels({kEnt}), labels({kEnt, kCon})),
                  LengthMismatch);
  CHECK_THROWS_AS(eval::accuracy({}, {}), EmptyInput);
}

TEST_CASE("accuracy and F1 ignore example order") {
  Rng rng(44);
  std::vector<Label> preds(200), golds(200);
  for (std::size_t i = 0; i < 200; ++i) {
    preds[i] = static_cast<Label>(rng.uniform_int(2));
    golds[i] = static_cast<Label>(rng.uniform_int(2));
  }
  const double base_acc = eval::accuracy(preds, golds);
  const auto base_f1 = eval::per_label_f1(preds, golds);

  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<Label> preds_p(200), golds_p(200);
  for (std::size_t i = 0; i < 200; ++i) {
    preds_p[i] = preds[perm[i]];
    golds_p[i] = golds[perm[i]];
  }
  CHECK(eval::accuracy(preds_p, golds_p) == base_acc);
  const auto perm_f1 = eval::per_label_f1(preds_p, golds_p);
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    CHECK(perm_f1.per_label[c].precision == base_f1.per_label[c].precision);
    CHECK(perm_f1.per_label[c].recall == base_f1.per_label[c].recall);
    CHECK(perm_f1.per_label[c].f1 == base_f1.per_label[c].f1);
  }
  CHECK(perm_f1.confusion.counts == base_f1.confusion.counts);
}

TEST_CASE("per_label_f1 reproduces the worked example") {
  const auto report = eval::per_label_f1(labels({kEnt, kCon, kCon}),
                                         labels({kEnt, kEnt, kCon}));
  const auto& ent = report.per_label[static_cast<std::size_t>(kEnt)];
  CHECK(ent.precision == 1.0);
  CHECK(ent.recall == 0.5);
  CHECK(ent.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const auto& con = report.per_label[static_cast<std::size_t>(kCon)];
  CHECK(con.precision == 0.5);
  CHECK(con.recall == 1.0);
  CHECK(con.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const auto& neu = report.per_label[static_cast<std::size_t>(kNeu)];
  CHECK(neu.precision == 0.0);
  CHECK(neu.recall == 0.0);
  CHECK(neu.f1 == 0.0);

  CHECK(report.confusion.counts[static_cast<std::size_t>(kEnt)]
                               [static_cast<std::size_t>(kEnt)] == 1);
  CHECK(report.confusion.counts[static_cast<std::size_t>(kEnt)]
                               [static_cast<std::size_t>(kCon)] == 1);
  CHECK(report.confusion.counts[static_cast<std::size_t>(kCon)]
                               [static_cast<std::size_t>(kCon)] == 1);
  CHECK(report.confusion.total() == 3);
}

TEST_CASE("per_label_f1: perfect predictions score 1 everywhere") {
  const auto report = eval::per_label_f1(labels({kCon, kEnt, kNeu}),
                                         labels({kCon, kEnt, kNeu}));
  for (const auto& s : report.per_label) {
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  CHECK(report.micro_f1 == 1.0);
}

TEST_CASE("micro-F1 equals accuracy exactly") {
  Rng rng(9);
  std::vector<Label> preds(1000), golds(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    preds[i] = static_cast<Label>(rng.uniform_int(2));
    golds[i] = static_cast<Label>(rng.uniform_int(2));
  }
  const auto report = eval::per_label_f1(preds, golds);
  CHECK(report.micro_f1 == eval::accuracy(preds, golds));
}

TEST_CASE("confusion matrix marginals match gold and prediction counts") {
  Rng rng(10);
  std::vector<Label> preds(300), golds(300);
  std::array<std::uint64_t, 3> gold_hist{}, pred_hist{};
  for (std::size_t i = 0; i < 300; ++i) {
    preds[i] = static_cast<Label>(rng.uniform_int(2));
    golds[i] = static_cast<Label>(rng.uniform_int(2));
    ++pred_hist[static_cast<std::size_t>(preds[i])];
    ++gold_hist[static_cast<std::size_t>(golds[i])];
  }
  const auto report = eval::per_label_f1(preds, golds);
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    CHECK(report.confusion.gold_count(static_cast<Label>(c)) == gold_hist[c]);
    CHECK(report.confusion.prediction_count(static_cast<Label>(c)) == pred_hist[c]);
  }
  CHECK(report.confusion.total() == 300);
}

TEST_CASE("bleu: identical corpora score exactly 100") {
  const Sentences text = {toks({"the", "cat", "sat", "on", "the", "mat"}),
                          toks({"a", "dog", "barked", "loudly", "outside"})};
  const auto report = eval::bleu(text, text);
  CHECK(report.bleu == 100.0);
  CHECK(report.brevity_penalty == 1.0);
  for (double p : report.precisions) CHECK(p == 1.0);
  CHECK(report.hypothesis_length == 11);
  CHECK(report.reference_length == 11);
}

TEST_CASE("bleu clips repeated n-grams against the reference") {
  const Sentences hyp = {toks({"the", "the", "the", "the", "the", "the", "the"})};
  const Sentences ref = {toks({"the", "cat", "is", "on", "the", "mat"})};
  const auto report = eval::bleu(hyp, ref);
  CHECK(report.precisions[0] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(report.precisions[1] == 0.0);
  CHECK(report.bleu == 0.0);
  CHECK(report.brevity_penalty == 1.0);  // hypothesis is the longer side
}

TEST_CASE("bleu: disjoint vocabulary scores zero") {
  const auto report = eval::bleu(Sentences{toks({"a", "b", "c", "d"})},
                                 Sentences{toks({"w", "x", "y", "z"})});
  CHECK(report.bleu == 0.0);
  CHECK(report.precisions[0] == 0.0);
}

TEST_CASE("bleu applies the brevity penalty only to short hypotheses") {
  // 4 hypothesis tokens vs 8 reference tokens: BP = exp(1 - 2) = e^-1.
  const Sentences hyp = {toks({"a", "b", "c", "d"})};
  const Sentences ref = {toks({"a", "b", "c", "d", "e", "f", "g", "h"})};
  const auto report = eval::bleu(hyp, ref);
  CHECK(report.brevity_penalty == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  for (std::size_t n = 0; n < 4; ++n)
    CHECK(report.precisions[n] == 1.0);  // every hypothesis n-gram appears
  CHECK(report.bleu == doctest::Approx(100.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("bleu supports shorter n-gram budgets") {
  const Sentences hyp = {toks({"a", "b"})};
  const Sentences ref = {toks({"a", "c"})};
  const auto unigram = eval::bleu(hyp, ref, 1);
  REQUIRE(unigram.precisions.size() == 1);
  CHECK(unigram.precisions[0] == 0.5);
  CHECK(unigram.bleu == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("bleu rejects mismatched and empty inputs") {
  const Sentences one = {toks({"a"})};
  const Sentences two = {toks({"a"}), toks({"b"})};
  CHECK_THROWS_AS(eval::bleu(one, two), LengthMismatch);
  CHECK_THROWS_AS(eval::bleu({}, {}), EmptyInput);
}

TEST_CASE("bleu agrees with a brute-force oracle on random corpora") {
  Rng rng(123);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n_sents = 1 + rng.uniform_int(4);
    Sentences hyps(n_sents), refs(n_sents);
    for (std::size_t s = 0; s < n_sents; ++s) {
      const std::size_t hyp_len = 1 + rng.uniform_int(11);
      const std::size_t ref_len = 1 + rng.uniform_int(11);
      for (std::size_t i = 0; i < hyp_len; ++i)
        hyps[s].push_back(vocab[rng.uniform_int(vocab.size() - 1)]);
      for (std::size_t i = 0; i < ref_len; ++i)
        refs[s].push_back(vocab[rng.uniform_int(vocab.size() - 1)]);
      if (rep % 5 == 0) refs[s] = hyps[s];  // mix in perfect sentences
    }
    const auto report = eval::bleu(hyps, refs);
    const auto oracle = bleu_oracle(hyps, refs, 4);
    for (std::size_t n = 0; n < 4; ++n)
      CHECK(std::abs(report.precisions[n] - oracle.precisions[n]) <= 1e-15);
    CHECK(std::abs(report.brevity_penalty - oracle.bp) <= 1e-15);
    CHECK(std::abs(report.bleu - oracle.score) <= 1e-12);

    CHECK(report.bleu >= 0.0);
    CHECK(report.bleu <= 100.0);
    CHECK(report.brevity_penalty > 0.0);
    CHECK(report.brevity_penalty <= 1.0);
    // Dropping the brevity penalty can only raise the score.
    CHECK(report.bleu <= report.bleu / report.brevity_penalty + 1e-12);
  }
}

TEST_CASE("evaluate_system: constant predictor scores the majority share") {
  const auto model = constant_model(4, 6);
  const auto space = small_space(6, 4, 5);
  // 50% contradiction, 25% entailment, 25% neutral.
  std::vector<NliExample> test = {
      {toks({"t0", "t1"}), toks({"t2"}), kCon},
      {toks({"t1", "t2"}), toks({"t3"}), kCon},
      {toks({"t2", "t3"}), toks({"t4"}), kCon},
      {toks({"t3", "t4"}), toks({"t5"}), kCon},
      {toks({"t4", "t5"}), toks({"t0"}), kEnt},
      {toks({"t5", "t0"}), toks({"t1"}), kEnt},
      {toks({"t0", "t2"}), toks({"t4"}), kNeu},
      {toks({"t1", "t3"}), toks({"t5"}), kNeu},
  };
  const auto report = eval::evaluate_system(model, space, test);
  CHECK(report.accuracy == 0.5);
  CHECK(report.example_count == 8);
  for (Label p : report.predictions) CHECK(p == kCon);
  CHECK(report.f1.confusion.prediction_count(kCon) == 8);
  CHECK(report.oov_rate == 0.0);
}

TEST_CASE("evaluate_system matches the standalone metrics") {
  nli::TrainConfig cfg;
  cfg.hidden = 6;
  cfg.seed = 15;
  const auto model = nli::init_model(4, cfg);
  const auto space = small_space(8, 4, 6);
  std::vector<NliExample> test = {
      {toks({"t0", "t1"}), toks({"t2", "t3"}), kEnt},
      {toks({"t4", "t5"}), toks({"t6"}), kCon},
      {toks({"t7", "t0"}), toks({"t1", "t2"}), kNeu},
      {toks({"t3"}), toks({"t4", "t5", "t6"}), kEnt},
  };
  const auto report = eval::evaluate_system(model, space, test);

  std::vector<Label> preds, golds;
  for (const auto& ex : test) {
    preds.push_back(nli::predict(model, space, ex.premise, ex.hypothesis).label);
    golds.push_back(ex.gold);
  }
  CHECK(report.predictions == preds);
  CHECK(report.accuracy == eval::accuracy(preds, golds));
  const auto direct = eval::per_label_f1(preds, golds);
  CHECK(report.f1.confusion.counts == direct.confusion.counts);
  for (std::size_t c = 0; c < kNumLabels; ++c)
    CHECK(report.f1.per_label[c].f1 == direct.per_label[c].f1);
}

TEST_CASE("evaluate_system: fully OOV test set still gets predictions") {
  const auto model = constant_model(4, 6);
  const auto space = small_space(4, 4, 7);
  std::vector<NliExample> test = {
      {toks({"qq", "ww"}), toks({"ee"}), kCon},
      {toks({"rr"}), toks({"tt", "yy"}), kEnt},
  };
  const auto report = eval::evaluate_system(model, space, test);
  CHECK(report.oov_rate == 1.0);
  CHECK(report.oov_tokens == 6);
  CHECK(report.token_count == 6);
  CHECK(report.predictions.size() == 2);
}

TEST_CASE("evaluate_system rejects an empty test set") {
  const auto model = constant_model(4, 6);
  const auto space = small_space(4, 4, 7);
  CHECK_THROWS_AS(eval::evaluate_system(model, space, {}), EmptyInput);
}

namespace {

// Tiny two-language corpus: word w<i> translates to c<i>.
ParallelCorpus curve_corpus(std::size_t n_pairs, std::uint64_t seed) {
  ParallelCorpus corpus{{}, LangTag("eng"), LangTag("fra")};
  Rng rng(seed);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    SentencePair pair{{}, {}, corpus.src_lang, corpus.tgt_lang};
    const std::size_t len = 3 + rng.uniform_int(2);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t w = rng.uniform_int(9);
      pair.src_tokens.push_back("w" + std::to_string(w));
      pair.tgt_tokens.push_back("c" + std::to_string(w));
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

eval::LearningCurveConfig tiny_curve_config() {
  eval::LearningCurveConfig cfg;
  cfg.method = eval::CurveMethod::random;
  cfg.sgns.dim = 8;
  cfg.sgns.window = 4;
  cfg.sgns.epochs = 2;
  cfg.sgns.seed = 3;
  cfg.train.epochs = 3;
  cfg.train.hidden = 8;
  cfg.train.batch_size = 8;
  cfg.train.dropout = 0.0;
  cfg.train.seed = 3;
  return cfg;
}

std::vector<NliExample> curve_nli_examples(std::string_view prefix) {
  const auto tok = [&prefix](int i) {
    return std::string(prefix) + ":" + (prefix == "eng" ? "w" : "c") +
           std::to_string(i);
  };
  std::vector<NliExample> out;
  out.push_back({{tok(0), tok(1), tok(2)}, {tok(0), tok(1)}, kEnt});
  out.push_back({{tok(0), tok(1), tok(2)}, {tok(3), tok(4)}, kCon});
  out.push_back({{tok(3), tok(4), tok(5)}, {tok(3), tok(4)}, kEnt});
  out.push_back({{tok(3), tok(4), tok(5)}, {tok(0), tok(1)}, kCon});
  out.push_back({{tok(0), tok(1)}, {tok(0), tok(3)}, kNeu});
  out.push_back({{tok(2), tok(3)}, {tok(2), tok(5)}, kNeu});
  out.push_back({{tok(4), tok(5)}, {tok(4), tok(1)}, kNeu});
  out.push_back({{tok(1), tok(2)}, {tok(1), tok(4)}, kEnt});
  return out;
}

}  // namespace

TEST_CASE("learning_curve emits one point per requested size") {
  const auto corpus = curve_corpus(40, 21);
  const auto train = curve_nli_examples("eng");
  const auto test = curve_nli_examples("fra");
  const std::vector<std::size_t> sizes = {10, 40};
  const auto points = eval::learning_curve(corpus, sizes, train, test,
                                           tiny_curve_config());
  REQUIRE(points.size() == 2);
  CHECK(points[0].pair_count == 10);
  CHECK(points[1].pair_count == 40);
  for (const auto& p : points) {
    CHECK(p.accuracy >= 0.0);
    CHECK(p.accuracy <= 1.0);
  }

  // Byte-for-byte repeatable.
  const auto again = eval::learning_curve(corpus, sizes, train, test,
                                          tiny_curve_config());
  REQUIRE(again.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    CHECK(again[i].accuracy == points[i].accuracy);
}

TEST_CASE("learning_curve validates its sizes") {
  const auto corpus = curve_corpus(20, 22);
  const auto train = curve_nli_examples("eng");
  const auto test = curve_nli_examples("fra");
  const auto cfg = tiny_curve_config();
  CHECK_THROWS_AS(eval::learning_curve(corpus, {}, train, test, cfg), EmptySizes);
  const std::vector<std::size_t> zero = {0};
  CHECK_THROWS_AS(eval::learning_curve(corpus, zero, train, test, cfg),
                  SizeOutOfRange);
  const std::vector<std::size_t> huge = {21};
  CHECK_THROWS_AS(eval::learning_curve(corpus, huge, train, test, cfg),
                  SizeOutOfRange);
  const std::vector<std::size_t> descending = {15, 10};
  CHECK_THROWS_AS(eval::learning_curve(corpus, descending, train, test, cfg),
                  SizeOutOfRange);
}

TEST_CASE("learning_curve subsample mode is seeded") {
  const auto corpus = curve_corpus(30, 23);
  const auto train = curve_nli_examples("eng");
  const auto test = curve_nli_examples("fra");
  auto cfg = tiny_curve_config();
  cfg.subsample = true;
  cfg.subsample_seed = 11;
  const std::vector<std::size_t> sizes = {8};
  const auto a = eval::learning_curve(corpus, sizes, train, test, cfg);
  const auto b = eval::learning_curve(corpus, sizes, train, test, cfg);
  REQUIRE(a.size() == 1);
  CHECK(a[0].accuracy == b[0].accuracy);
  CHECK(a[0].pair_count == 8);
}

TEST_CASE("proxy_gap is the signed machine-minus-manual difference") {
  CHECK(eval::proxy_gap(0.60, 0.60) == 0.0);
  CHECK(std::abs(eval::proxy_gap(0.5, 0.55) - 5.0) <= 1e-12);
  CHECK(std::abs(eval::proxy_gap(0.60, 0.5743) - (-2.57)) <= 1e-12);
  CHECK_THROWS_AS(eval::proxy_gap(-0.1, 0.5), OutOfRange);
  CHECK_THROWS_AS(eval::proxy_gap(0.5, 1.1), OutOfRange);
}

TEST_CASE("reports render deterministically in both formats") {
  const auto model = constant_model(4, 6);
  const auto space = small_space(6, 4, 5);
  std::vector<NliExample> test = {
      {toks({"t0", "t1"}), toks({"t2"}), kCon},
      {toks({"t1", "zz"}), toks({"t3"}), kEnt},
  };
  const auto report = eval::evaluate_system(model, space, test);

  const auto tsv = eval::report_tsv(report);
  CHECK(tsv == eval::report_tsv(report));
  CHECK(tsv.find("metric\tvalue\n") == 0);
  CHECK(tsv.find("accuracy\t0.5\n") != std::string::npos);
  CHECK(tsv.find("examples\t2\n") != std::string::npos);
  CHECK(tsv.find("f1_contradiction\t") != std::string::npos);
  CHECK(tsv.find("confusion_entailment_contradiction\t1\n") != std::string::npos);

  const auto text = eval::render_report(report);
  CHECK(text.find("accuracy  0.5000") != std::string::npos);
  CHECK(text.find("contradiction") != std::string::npos);

  const auto b = eval::bleu(Sentences{toks({"a", "b", "c", "d"})},
                            Sentences{toks({"a", "b", "c", "d"})});
  const auto btsv = eval::bleu_tsv(b);
  CHECK(btsv.find("bleu\t100\n") != std::string::npos);
  CHECK(btsv.find("p4\t1\n") != std::string::npos);
  CHECK(eval::render_bleu(b).find("BLEU  100.0000") != std::string::npos);
}

TEST_CASE("curve renderers format points as two columns") {
  const std::vector<eval::CurvePoint> points = {{100, 0.5}, {200, 0.75}};
  CHECK(eval::curve_tsv(points) == "pairs\taccuracy\n100\t0.5\n200\t0.75\n");
  const auto text = eval::render_curve(points);
  CHECK(text.find("pairs") != std::string::npos);
  CHECK(text.find("0.7500") != std::string::npos);
}
