#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xnli/core.hpp"
#include "xnli/error.hpp"
#include "xnli/numkit.hpp"

// Shared multilingual embedding spaces. Five construction routes:
//   map    - monolingual spaces aligned by a least-squares translation matrix
//   random - SGNS over parallel sentences merged with a seeded shuffle
//   ratio  - SGNS over parallel sentences merged by deterministic interleave
//   invert - SVD of a word-by-sentence-ID occurrence matrix
//   bicvm  - additive sentence vectors trained with a noise-contrastive hinge
// Except for map, all routes emit language-prefixed vocabularies ("eng:dog")
// so one space can hold every language without collisions.

namespace xnli::xembed {

// -------- translation-matrix mapping --------

struct TranslationFit {
  LinearMap map;            // from tgt_space's language into src_space's
  std::size_t pairs_used = 0;
  bool ridge_fallback = false;
};

// Least-squares W minimizing ||X W - Z|| over dictionary pairs with both
// sides in-vocabulary, X = target vectors, Z = source vectors.
TranslationFit fit_translation_matrix(const EmbeddingSpace& tgt_space,
                                      const EmbeddingSpace& src_space,
                                      const Dictionary& dict,
                                      const LangTag& tgt_lang = LangTag("tgt"),
                                      const LangTag& src_lang = LangTag("src"));

// Every row v becomes v * W; vocabulary unchanged.
EmbeddingSpace apply_map(const LinearMap& map, const EmbeddingSpace& space);

// -------- sentence merging --------

struct MergedCorpus {
  std::vector<std::vector<std::string>> sentences;  // prefixed tokens
  std::string method;                               // "random" or "ratio"
};

// Uniform permutation of the prefixed union of both sides.
std::vector<std::string> merge_random(const SentencePair& pair, numkit::Rng& rng);

// Deterministic interleave: with i of m source and j of n target tokens
// emitted, the side with the smaller emitted fraction goes next (i/m vs j/n,
// compared exactly as i*n vs j*m); ties emit source. Within-language order
// is preserved.
std::vector<std::string> merge_ratio(const SentencePair& pair);

MergedCorpus merge_corpus_random(const ParallelCorpus& parallel, numkit::Rng& rng);
MergedCorpus merge_corpus_ratio(const ParallelCorpus& parallel);

// One sentence per line, tokens space-separated.
void write_merged(const MergedCorpus& corpus, const std::filesystem::path& path);

// -------- skip-gram with negative sampling --------

struct SgnsConfig {
  std::size_t dim = 300;
  std::size_t window = 5;       // symmetric, fixed width
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025; // decays linearly to 1e-4 of itself
  std::size_t min_count = 1;
  double subsample = 0.0;       // frequency threshold; 0 disables
  std::uint64_t seed = 0;
};

struct SgnsResult {
  EmbeddingSpace space;              // input vectors
  std::vector<double> epoch_losses;  // summed pair losses per epoch
};

SgnsResult train_sgns(const std::vector<std::vector<std::string>>& sentences,
                      const SgnsConfig& cfg);

// Loss and gradient of one (center, context, negatives) instance at the
// parameter point `params`, laid out [v_center | u_context | u_neg_1 ..
// u_neg_k], each of width dim. Pure; used by the trainer's test harness.
struct PairGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

PairGrad sgns_pair_loss_grad(std::span<const double> params, std::size_t dim,
                             std::size_t negatives);

// Fused training step: same math as sgns_pair_loss_grad, gradients evaluated
// at the incoming values, then one SGD update in place. Returns the loss.
double sgns_pair_update(std::span<double> v_center, std::span<double> u_context,
                        std::span<std::span<double>> u_negatives, double lr);

// merge (seeded from cfg.seed) then train.
SgnsResult embed_random(const ParallelCorpus& parallel, const SgnsConfig& cfg,
                        MergedCorpus* merged_out = nullptr);
SgnsResult embed_ratio(const ParallelCorpus& parallel, const SgnsConfig& cfg,
                       MergedCorpus* merged_out = nullptr);

// -------- inverted index + SVD --------

enum class InvertWeighting { binary, count };

struct InvertConfig {
  std::size_t rank = 300;
  InvertWeighting weighting = InvertWeighting::binary;
  double sigma_power = 0.5;  // vectors = U * diag(S^p)
  std::uint64_t seed = 0;    // seeds the truncated SVD
  // SVD stopping rule. Co-occurrence spectra are nearly flat around any
  // realistic cut, so the solver needs far more sweeps, and far less
  // precision, than the solver's oracle-grade defaults.
  std::size_t svd_max_iters = 10000;
  double svd_tol = 1e-7;
};

struct InvertedIndex {
  Vocabulary vocab;             // prefixed word types, rows
  numkit::SparseMatrix matrix;  // types x sentence IDs
  std::size_t num_sentences = 0;
};

// Corpora must share sentence IDs pairwise: pair i of every corpus describes
// sentence i. Each language's side stacks under the same column space, so
// more than two languages can share the index.
InvertedIndex build_inverted_index(std::span<const ParallelCorpus> corpora,
                                   InvertWeighting weighting);

EmbeddingSpace embed_invert(const InvertedIndex& index, const InvertConfig& cfg);

// -------- bilingual compositional vectors --------

struct BicvmConfig {
  std::size_t dim = 300;
  double margin = 1.0;
  std::size_t negatives = 1;  // noise sentences per pair
  std::size_t epochs = 5;
  double learning_rate = 0.01;
  double l2 = 1e-4;  // weight decay, applied to vectors touched by an update
  std::uint64_t seed = 0;
};

struct BicvmResult {
  EmbeddingSpace space;              // union vocabulary of both sides
  std::vector<double> epoch_losses;  // hinge sum + l2 penalty at epoch end
};

// Sentences compose additively; each aligned pair is pulled together and
// pushed from sampled negative target sentences by a margin hinge on squared
// distances.
BicvmResult train_bicvm(const ParallelCorpus& parallel, const BicvmConfig& cfg);

// Hinge loss and gradient for one (a, b, b') triple at `params`, laid out as
// the concatenation of a's, b's, then b''s word vectors, each of width dim.
// The l2 term is not included. Pure; used by the trainer's test harness.
PairGrad bicvm_pair_loss_grad(std::span<const double> params, std::size_t dim,
                              std::size_t a_len, std::size_t b_len,
                              std::size_t b_neg_len, double margin);

}  // namespace xnli::xembed
