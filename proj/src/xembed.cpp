#include "xnli/xembed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace xnli::xembed {

using numkit::Matrix;
using numkit::Rng;
using numkit::SparseMatrix;

// -------- translation-matrix mapping --------

TranslationFit fit_translation_matrix(const EmbeddingSpace& tgt_space,
                                      const EmbeddingSpace& src_space,
                                      const Dictionary& dict,
                                      const LangTag& tgt_lang,
                                      const LangTag& src_lang) {
  std::vector<std::pair<std::span<const double>, std::span<const double>>> usable;
  for (const auto& [src_word, tgt_word] : dict.entries) {
    auto tv = tgt_space.lookup(tgt_word);
    auto sv = src_space.lookup(src_word);
    if (tv && sv) usable.emplace_back(*tv, *sv);
  }
  if (usable.empty())
    throw NoUsablePairs("fit_translation_matrix: every dictionary entry has an out-of-vocabulary side");

  Matrix x(usable.size(), tgt_space.dim());
  Matrix z(usable.size(), src_space.dim());
  for (std::size_t r = 0; r < usable.size(); ++r) {
    std::copy(usable[r].first.begin(), usable[r].first.end(), x.row(r).begin());
    std::copy(usable[r].second.begin(), usable[r].second.end(), z.row(r).begin());
  }
  auto fit = numkit::solve_least_squares(x, z);
  return {LinearMap{std::move(fit.solution), tgt_lang, src_lang}, usable.size(),
          fit.ridge_fallback};
}

EmbeddingSpace apply_map(const LinearMap& map, const EmbeddingSpace& space) {
  if (space.dim() != map.matrix.rows())
    throw DimMismatch("apply_map: space dimension disagrees with map rows");
  return {space.vocab, numkit::matmul(space.matrix, map.matrix)};
}

// -------- sentence merging --------

namespace {

std::vector<std::string> prefixed_union(const SentencePair& pair) {
  if (pair.src_tokens.empty() || pair.tgt_tokens.empty())
    throw EmptySide("merge: a sentence pair has an empty side");
  std::vector<std::string> out;
  out.reserve(pair.src_tokens.size() + pair.tgt_tokens.size());
  for (const auto& t : pair.src_tokens) out.push_back(prefix_token(pair.src_lang, t));
  for (const auto& t : pair.tgt_tokens) out.push_back(prefix_token(pair.tgt_lang, t));
  return out;
}

}  // namespace

std::vector<std::string> merge_random(const SentencePair& pair, Rng& rng) {
  auto out = prefixed_union(pair);
  rng.shuffle(out);
  return out;
}

std::vector<std::string> merge_ratio(const SentencePair& pair) {
  if (pair.src_tokens.empty() || pair.tgt_tokens.empty())
    throw EmptySide("merge: a sentence pair has an empty side");
  const std::size_t m = pair.src_tokens.size();
  const std::size_t n = pair.tgt_tokens.size();
  std::vector<std::string> out;
  out.reserve(m + n);
  std::size_t i = 0, j = 0;
  while (i < m || j < n) {
    // Emit the side with the smaller emitted fraction, i/m vs j/n; exact
    // integer comparison, source wins ties.
    const bool take_src = (i < m) && (j == n || i * n <= j * m);
    if (take_src)
      out.push_back(prefix_token(pair.src_lang, pair.src_tokens[i++]));
    else
      out.push_back(prefix_token(pair.tgt_lang, pair.tgt_tokens[j++]));
  }
  return out;
}

MergedCorpus merge_corpus_random(const ParallelCorpus& parallel, Rng& rng) {
  MergedCorpus out;
  out.method = "random";
  out.sentences.reserve(parallel.pairs.size());
  for (const auto& pair : parallel.pairs) out.sentences.push_back(merge_random(pair, rng));
  return out;
}

MergedCorpus merge_corpus_ratio(const ParallelCorpus& parallel) {
  MergedCorpus out;
  out.method = "ratio";
  out.sentences.reserve(parallel.pairs.size());
  for (const auto& pair : parallel.pairs) out.sentences.push_back(merge_ratio(pair));
  return out;
}

void write_merged(const MergedCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& sentence : corpus.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i > 0) out << ' ';
      out << sentence[i];
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

// -------- skip-gram with negative sampling --------

namespace {

double log_sigmoid(double x) {
  // -log(1 + e^-x), computed on the stable side.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Cumulative unigram^0.75 table; sample by binary search over a uniform draw.
class NegativeTable {
 public:
  explicit NegativeTable(const Vocabulary& vocab) {
    cumulative_.reserve(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      total += std::pow(static_cast<double>(vocab.count_of(i)), 0.75);
      cumulative_.push_back(total);
    }
  }

  std::size_t sample(Rng& rng) const {
    const double r = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    return std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

PairGrad sgns_pair_loss_grad(std::span<const double> params, std::size_t dim,
                             std::size_t negatives) {
  if (params.size() != dim * (negatives + 2))
    throw ShapeMismatch("sgns_pair_loss_grad: parameter block size disagrees with layout");
  const auto v_c = params.subspan(0, dim);
  const auto u_o = params.subspan(dim, dim);

  PairGrad out;
  out.grad.assign(params.size(), 0.0);
  const auto g_v = std::span<double>(out.grad).subspan(0, dim);
  const auto g_o = std::span<double>(out.grad).subspan(dim, dim);

  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += u_o[d] * v_c[d];
  out.loss = -log_sigmoid(s);
  const double coef_pos = sigmoid(s) - 1.0;
  for (std::size_t d = 0; d < dim; ++d) {
    g_o[d] = coef_pos * v_c[d];
    g_v[d] = coef_pos * u_o[d];
  }
  for (std::size_t k = 0; k < negatives; ++k) {
    const auto u_n = params.subspan(dim * (2 + k), dim);
    const auto g_n = std::span<double>(out.grad).subspan(dim * (2 + k), dim);
    double sn = 0.0;
    for (std::size_t d = 0; d < dim; ++d) sn += u_n[d] * v_c[d];
    out.loss -= log_sigmoid(-sn);
    const double coef = sigmoid(sn);
    for (std::size_t d = 0; d < dim; ++d) {
      g_n[d] = coef * v_c[d];
      g_v[d] += coef * u_n[d];
    }
  }
  return out;
}

double sgns_pair_update(std::span<double> v_center, std::span<double> u_context,
                        std::span<std::span<double>> u_negatives, double lr) {
  const std::size_t dim = v_center.size();
  std::vector<double> v_grad(dim, 0.0);

  double s = 0.0;
  for (std::size_t d = 0; d < dim; ++d) s += u_context[d] * v_center[d];
  double loss = -log_sigmoid(s);
  const double coef_pos = sigmoid(s) - 1.0;
  for (std::size_t d = 0; d < dim; ++d) {
    v_grad[d] += coef_pos * u_context[d];
    u_context[d] -= lr * coef_pos * v_center[d];
  }
  for (auto u_n : u_negatives) {
    double sn = 0.0;
    for (std::size_t d = 0; d < dim; ++d) sn += u_n[d] * v_center[d];
    loss -= log_sigmoid(-sn);
    const double coef = sigmoid(sn);
    for (std::size_t d = 0; d < dim; ++d) {
      v_grad[d] += coef * u_n[d];
      u_n[d] -= lr * coef * v_center[d];
    }
  }
  for (std::size_t d = 0; d < dim; ++d) v_center[d] -= lr * v_grad[d];
  return loss;
}

SgnsResult train_sgns(const std::vector<std::vector<std::string>>& sentences,
                      const SgnsConfig& cfg) {
  // Count in first-occurrence order, then keep types meeting min_count.
  Vocabulary counts;
  std::uint64_t total_tokens = 0;
  for (const auto& sentence : sentences)
    for (const auto& token : sentence) {
      counts.add(token);
      ++total_tokens;
    }
  if (total_tokens == 0) throw EmptyCorpus("train_sgns: corpus has no tokens");

  Vocabulary vocab;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts.count_of(i) >= cfg.min_count)
      vocab.add(counts.token_of(i), counts.count_of(i));
  if (vocab.size() < 2)
    throw DegenerateVocabulary("train_sgns: fewer than 2 types survive min_count");

  std::vector<std::vector<std::size_t>> encoded;
  std::size_t positions = 0;
  for (const auto& sentence : sentences) {
    std::vector<std::size_t> ids;
    ids.reserve(sentence.size());
    for (const auto& token : sentence)
      if (auto idx = vocab.find(token)) ids.push_back(*idx);
    if (!ids.empty()) {
      positions += ids.size();
      encoded.push_back(std::move(ids));
    }
  }

  Rng rng(cfg.seed);
  Matrix input(vocab.size(), cfg.dim);
  const double half = 0.5 / static_cast<double>(cfg.dim);
  for (double& v : input.flat()) v = rng.uniform(-half, half);
  Matrix context(vocab.size(), cfg.dim);  // zero start

  const NegativeTable table(vocab);
  const double survived = static_cast<double>(positions);

  SgnsResult result;
  result.epoch_losses.reserve(cfg.epochs);
  std::vector<std::span<double>> negs(cfg.negatives);
  std::size_t processed = 0;
  const double total_work =
      std::max<double>(1.0, survived * static_cast<double>(cfg.epochs));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (const auto& ids : encoded) {
      // Optional frequency subsampling, re-drawn every epoch.
      std::vector<std::size_t> kept;
      const std::vector<std::size_t>* active = &ids;
      if (cfg.subsample > 0.0) {
        kept.reserve(ids.size());
        for (std::size_t id : ids) {
          const double freq = static_cast<double>(vocab.count_of(id)) /
                              static_cast<double>(total_tokens);
          const double keep =
              freq <= cfg.subsample ? 1.0 : std::sqrt(cfg.subsample / freq);
          if (rng.uniform() < keep) kept.push_back(id);
        }
        active = &kept;
      }
      const auto& seq = *active;
      for (std::size_t c = 0; c < seq.size(); ++c) {
        const double frac = static_cast<double>(processed) / total_work;
        const double lr =
            std::max(cfg.learning_rate * (1.0 - frac), cfg.learning_rate * 1e-4);
        ++processed;
        const std::size_t lo = c >= cfg.window ? c - cfg.window : 0;
        const std::size_t hi = std::min(seq.size(), c + cfg.window + 1);
        for (std::size_t o = lo; o < hi; ++o) {
          if (o == c) continue;
          for (auto& neg : negs) {
            std::size_t idx;
            do {
              idx = table.sample(rng);
            } while (idx == seq[o]);
            neg = context.row(idx);
          }
          epoch_loss += sgns_pair_update(input.row(seq[c]), context.row(seq[o]),
                                         negs, lr);
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss);
  }

  result.space = EmbeddingSpace{std::move(vocab), std::move(input)};
  return result;
}

SgnsResult embed_random(const ParallelCorpus& parallel, const SgnsConfig& cfg,
                        MergedCorpus* merged_out) {
  Rng merge_rng(Rng::derive(cfg.seed, "merge-random"));
  MergedCorpus merged = merge_corpus_random(parallel, merge_rng);
  auto result = train_sgns(merged.sentences, cfg);
  if (merged_out) *merged_out = std::move(merged);
  return result;
}

SgnsResult embed_ratio(const ParallelCorpus& parallel, const SgnsConfig& cfg,
                       MergedCorpus* merged_out) {
  MergedCorpus merged = merge_corpus_ratio(parallel);
  auto result = train_sgns(merged.sentences, cfg);
  if (merged_out) *merged_out = std::move(merged);
  return result;
}

// -------- inverted index + SVD --------

InvertedIndex build_inverted_index(std::span<const ParallelCorpus> corpora,
                                   InvertWeighting weighting) {
  if (corpora.empty()) throw EmptyCorpus("build_inverted_index: no corpora");
  const std::size_t n_sentences = corpora.front().pairs.size();
  if (n_sentences == 0) throw EmptyCorpus("build_inverted_index: corpora have no pairs");
  for (const auto& corpus : corpora)
    if (corpus.pairs.size() != n_sentences)
      throw LengthMismatch("build_inverted_index: corpora disagree on pair count");

  InvertedIndex index;
  index.num_sentences = n_sentences;
  for (const auto& corpus : corpora)
    for (const auto& pair : corpus.pairs) {
      for (const auto& t : pair.src_tokens) index.vocab.add(prefix_token(pair.src_lang, t));
      for (const auto& t : pair.tgt_tokens) index.vocab.add(prefix_token(pair.tgt_lang, t));
    }

  index.matrix = SparseMatrix(index.vocab.size(), n_sentences);
  for (const auto& corpus : corpora)
    for (std::size_t sid = 0; sid < n_sentences; ++sid) {
      const auto& pair = corpus.pairs[sid];
      for (const auto& t : pair.src_tokens)
        index.matrix.add(index.vocab.index_of(prefix_token(pair.src_lang, t)), sid, 1.0);
      for (const auto& t : pair.tgt_tokens)
        index.matrix.add(index.vocab.index_of(prefix_token(pair.tgt_lang, t)), sid, 1.0);
    }
  if (weighting == InvertWeighting::binary) index.matrix.binarize();
  return index;
}

EmbeddingSpace embed_invert(const InvertedIndex& index, const InvertConfig& cfg) {
  const numkit::SvdConfig svd_cfg{
      .max_iters = cfg.svd_max_iters, .tol = cfg.svd_tol, .seed = cfg.seed};
  const auto svd = numkit::truncated_svd(index.matrix, cfg.rank, svd_cfg);
  Matrix vectors = svd.u;
  for (std::size_t j = 0; j < cfg.rank; ++j) {
    const double scale = std::pow(svd.singular_values[j], cfg.sigma_power);
    for (std::size_t i = 0; i < vectors.rows(); ++i) vectors(i, j) *= scale;
  }
  return {index.vocab, std::move(vectors)};
}

// -------- bilingual compositional vectors --------

PairGrad bicvm_pair_loss_grad(std::span<const double> params, std::size_t dim,
                              std::size_t a_len, std::size_t b_len,
                              std::size_t b_neg_len, double margin) {
  if (params.size() != dim * (a_len + b_len + b_neg_len))
    throw ShapeMismatch("bicvm_pair_loss_grad: parameter block size disagrees with layout");

  const auto sum_of = [&](std::size_t start, std::size_t len) {
    std::vector<double> s(dim, 0.0);
    for (std::size_t w = 0; w < len; ++w)
      for (std::size_t d = 0; d < dim; ++d) s[d] += params[(start + w) * dim + d];
    return s;
  };
  const auto s_a = sum_of(0, a_len);
  const auto s_b = sum_of(a_len, b_len);
  const auto s_n = sum_of(a_len + b_len, b_neg_len);

  double d_pos = 0.0, d_neg = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    d_pos += (s_a[d] - s_b[d]) * (s_a[d] - s_b[d]);
    d_neg += (s_a[d] - s_n[d]) * (s_a[d] - s_n[d]);
  }

  PairGrad out;
  out.grad.assign(params.size(), 0.0);
  out.loss = std::max(0.0, margin + d_pos - d_neg);
  if (out.loss == 0.0) return out;

  // Every word of a sentence shares that sentence's gradient (additive
  // composition).
  for (std::size_t w = 0; w < a_len; ++w)
    for (std::size_t d = 0; d < dim; ++d)
      out.grad[w * dim + d] = 2.0 * (s_n[d] - s_b[d]);
  for (std::size_t w = 0; w < b_len; ++w)
    for (std::size_t d = 0; d < dim; ++d)
      out.grad[(a_len + w) * dim + d] = -2.0 * (s_a[d] - s_b[d]);
  for (std::size_t w = 0; w < b_neg_len; ++w)
    for (std::size_t d = 0; d < dim; ++d)
      out.grad[(a_len + b_len + w) * dim + d] = 2.0 * (s_a[d] - s_n[d]);
  return out;
}

BicvmResult train_bicvm(const ParallelCorpus& parallel, const BicvmConfig& cfg) {
  if (parallel.pairs.empty()) throw EmptyCorpus("train_bicvm: corpus has no pairs");

  Vocabulary vocab;
  for (const auto& pair : parallel.pairs) {
    for (const auto& t : pair.src_tokens) vocab.add(prefix_token(pair.src_lang, t));
    for (const auto& t : pair.tgt_tokens) vocab.add(prefix_token(pair.tgt_lang, t));
  }

  std::vector<std::vector<std::size_t>> src_ids(parallel.pairs.size());
  std::vector<std::vector<std::size_t>> tgt_ids(parallel.pairs.size());
  for (std::size_t i = 0; i < parallel.pairs.size(); ++i) {
    const auto& pair = parallel.pairs[i];
    for (const auto& t : pair.src_tokens)
      src_ids[i].push_back(vocab.index_of(prefix_token(pair.src_lang, t)));
    for (const auto& t : pair.tgt_tokens)
      tgt_ids[i].push_back(vocab.index_of(prefix_token(pair.tgt_lang, t)));
  }

  Rng rng(cfg.seed);
  Matrix table(vocab.size(), cfg.dim);
  const double half = 0.5 / static_cast<double>(cfg.dim);
  for (double& v : table.flat()) v = rng.uniform(-half, half);

  const auto sentence_sum = [&](const std::vector<std::size_t>& ids) {
    std::vector<double> s(cfg.dim, 0.0);
    for (std::size_t id : ids) {
      const auto row = table.row(id);
      for (std::size_t d = 0; d < cfg.dim; ++d) s[d] += row[d];
    }
    return s;
  };
  const auto push_gradient = [&](const std::vector<std::size_t>& ids,
                                 std::span<const double> grad) {
    for (std::size_t id : ids) {
      auto row = table.row(id);
      for (std::size_t d = 0; d < cfg.dim; ++d)
        row[d] -= cfg.learning_rate * (grad[d] + 2.0 * cfg.l2 * row[d]);
    }
  };

  const std::size_t n = parallel.pairs.size();
  BicvmResult result;
  result.epoch_losses.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double hinge_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t neg = 0; neg < cfg.negatives; ++neg) {
        if (n < 2) {
          // No distinct negative exists; the hinge is exactly the margin and
          // the distance terms cancel, so there is nothing to update.
          hinge_sum += cfg.margin;
          continue;
        }
        std::size_t j = rng.uniform_int(n - 1);
        if (j >= i) ++j;

        const auto s_a = sentence_sum(src_ids[i]);
        const auto s_b = sentence_sum(tgt_ids[i]);
        const auto s_n = sentence_sum(tgt_ids[j]);
        double d_pos = 0.0, d_neg = 0.0;
        for (std::size_t d = 0; d < cfg.dim; ++d) {
          d_pos += (s_a[d] - s_b[d]) * (s_a[d] - s_b[d]);
          d_neg += (s_a[d] - s_n[d]) * (s_a[d] - s_n[d]);
        }
        const double loss = std::max(0.0, cfg.margin + d_pos - d_neg);
        hinge_sum += loss;
        if (loss == 0.0) continue;

        std::vector<double> g_a(cfg.dim), g_b(cfg.dim), g_n(cfg.dim);
        for (std::size_t d = 0; d < cfg.dim; ++d) {
          g_a[d] = 2.0 * (s_n[d] - s_b[d]);
          g_b[d] = -2.0 * (s_a[d] - s_b[d]);
          g_n[d] = 2.0 * (s_a[d] - s_n[d]);
        }
        push_gradient(src_ids[i], g_a);
        push_gradient(tgt_ids[i], g_b);
        push_gradient(tgt_ids[j], g_n);
      }
    }
    double norm2 = 0.0;
    for (double v : table.flat()) norm2 += v * v;
    result.epoch_losses.push_back(hinge_sum + cfg.l2 * norm2);
  }

  result.space = EmbeddingSpace{std::move(vocab), std::move(table)};
  return result;
}

}  // namespace xnli::xembed
