#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xnli/core.hpp"
#include "xnli/error.hpp"
#include "xnli/numkit.hpp"

// Decomposable-attention NLI classifier. The model consumes token vectors
// only: predictions depend on the embedding rows a sentence looks up, never
// on the token strings, which is what makes a trained classifier portable
// across any embedding space sharing the training space's geometry.

namespace xnli::nli {

// Two affine layers, ReLU after each: relu(w2 * relu(w1 x + b1) + b2).
struct FeedForward {
  numkit::Matrix w1;       // hidden x in
  std::vector<double> b1;  // hidden
  numkit::Matrix w2;       // out x hidden
  std::vector<double> b2;  // out

  std::size_t in_width() const { return w1.cols(); }
  std::size_t out_width() const { return w2.rows(); }
};

struct NliModel {
  std::size_t embed_dim = 0;  // d
  std::size_t hidden = 0;     // h
  numkit::Matrix projection;  // h x d, applied to every input embedding
  FeedForward attend_ff;      // h -> h   (attention scorer)
  FeedForward compare_ff;     // 2h -> h  (comparison)
  FeedForward aggregate_ff;   // 2h -> h  (aggregation head)
  numkit::Matrix output;      // 3 x h
  std::vector<double> output_bias;  // 3
  bool frozen_embeddings = true;    // whether training left the table fixed
};

// Shape and finiteness check; throws ShapeMismatch or NonFiniteValue.
void validate_model(const NliModel& model);

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  std::size_t hidden = 200;
  double dropout = 0.2;  // training only, applied to feed-forward layer inputs
  numkit::OptKind optimizer = numkit::OptKind::adagrad;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  bool freeze_embeddings = true;
};

// Soft alignment of one sentence pair.
struct AttentionTrace {
  numkit::Matrix scores;           // m x n, e_ij = F(a_i) . F(b_j)
  numkit::Matrix weights;          // m x n, rows softmax-normalized
  numkit::Matrix beta;             // m x h, hypothesis summary per premise token
  numkit::Matrix alpha;            // n x h, premise summary per hypothesis token
  numkit::Matrix premise_proj;     // m x h
  numkit::Matrix hypothesis_proj;  // n x h
};

// Rows of premise_vecs/hypothesis_vecs are raw d-dimensional token vectors.
AttentionTrace attend(const numkit::Matrix& premise_vecs,
                      const numkit::Matrix& hypothesis_vecs, const NliModel& model);

// Row i of the result is G(concat(vecs_i, aligned_i)); both inputs are t x h.
numkit::Matrix compare(const numkit::Matrix& vecs, const numkit::Matrix& aligned,
                       const NliModel& model);

// Sum each side's comparison vectors, feed the concatenation through the
// aggregation head, and return the three class scores (label order).
std::array<double, 3> aggregate(const numkit::Matrix& cmp_premise,
                                const numkit::Matrix& cmp_hypothesis,
                                const NliModel& model);

// Token vectors for a sentence; out-of-vocabulary tokens become zero rows.
numkit::Matrix embed_sentence(const EmbeddingSpace& embeddings,
                              std::span<const std::string> tokens,
                              std::size_t* oov_count = nullptr);

struct ForwardResult {
  std::array<double, 3> probabilities;  // label order, sums to 1
  std::size_t oov_count = 0;
  std::size_t token_count = 0;
  std::optional<AttentionTrace> trace;
};

ForwardResult forward(const NliModel& model, const EmbeddingSpace& embeddings,
                      std::span<const std::string> premise,
                      std::span<const std::string> hypothesis,
                      bool want_trace = false);

// Highest-probability label; exact ties resolve to the lowest label value.
Label argmax_label(const std::array<double, 3>& probabilities);

struct Prediction {
  Label label;
  std::array<double, 3> probabilities;
  std::size_t oov_count = 0;
  std::size_t token_count = 0;
};

Prediction predict(const NliModel& model, const EmbeddingSpace& embeddings,
                   std::span<const std::string> premise,
                   std::span<const std::string> hypothesis);

// Seeded Glorot-uniform initialization of all weights, zero biases.
NliModel init_model(std::size_t embed_dim, const TrainConfig& cfg);

struct TrainResult {
  NliModel model;
  std::vector<double> epoch_losses;  // mean cross-entropy per epoch
  // Present when freeze_embeddings is off: the updated table.
  std::optional<EmbeddingSpace> tuned_embeddings;
};

TrainResult train_nli(std::span<const NliExample> train,
                      const EmbeddingSpace& embeddings, const TrainConfig& cfg);

// Flat view of every trainable model parameter, fixed layout: projection,
// attend/compare/aggregate feed-forwards (w1, b1, w2, b2 each), output
// weights, output bias. unflatten_params is its exact inverse.
std::vector<double> flatten_params(const NliModel& model);
void unflatten_params(NliModel& model, std::span<const double> params);

// Mean cross-entropy over a batch and its gradient in flatten_params layout,
// dropout disabled. When want_embedding_grad is set, also the gradient with
// respect to the embedding table (zero rows for tokens the batch never uses).
struct BatchGrad {
  double loss = 0.0;
  std::vector<double> model_grad;
  numkit::Matrix embedding_grad;
};

BatchGrad batch_loss_grad(const NliModel& model, const EmbeddingSpace& embeddings,
                          std::span<const NliExample> batch,
                          bool want_embedding_grad = false);

// Text serialization: header (widths, label order, flags) plus every
// parameter block in the shared float grammar. load(save(m)) == m exactly.
void save_model(const NliModel& model, const std::filesystem::path& path);
NliModel load_model(const std::filesystem::path& path);

}  // namespace xnli::nli
