#include "xnli/nli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "xnli/ingest.hpp"

namespace xnli::nli {

using numkit::Matrix;
using numkit::Rng;

namespace {

void check_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw NonFiniteValue(std::string(what) + ": non-finite parameter");
}

void check_shape(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(std::string(what) + ": inconsistent widths");
}

// ---- feed-forward plumbing ----

// Everything the backward pass needs from one application.
struct FfCache {
  std::vector<double> mask0, mask1;  // inverted-dropout masks; empty when off
  std::vector<double> xin;           // (masked) input, what w1 saw
  std::vector<double> z1;            // first pre-activation
  std::vector<double> h1m;           // (masked) relu(z1), what w2 saw
  std::vector<double> z2;            // second pre-activation
};

std::vector<double> draw_mask(Rng& rng, double rate, std::size_t n) {
  std::vector<double> mask(n);
  const double keep = 1.0 - rate;
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  return mask;
}

struct DropoutState {
  Rng* rng = nullptr;
  double rate = 0.0;
  bool active() const { return rng != nullptr && rate > 0.0; }
};

std::vector<double> affine(const Matrix& w, const std::vector<double>& b,
                           std::span<const double> x) {
  std::vector<double> out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = b[i];
    const auto row = w.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * x[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> ff_apply(const FeedForward& ff, std::span<const double> x,
                             FfCache* cache, DropoutState* dropout) {
  std::vector<double> xin(x.begin(), x.end());
  std::vector<double> mask0, mask1;
  if (dropout && dropout->active()) {
    mask0 = draw_mask(*dropout->rng, dropout->rate, xin.size());
    for (std::size_t i = 0; i < xin.size(); ++i) xin[i] *= mask0[i];
  }
  std::vector<double> z1 = affine(ff.w1, ff.b1, xin);
  std::vector<double> h1m(z1.size());
  for (std::size_t i = 0; i < z1.size(); ++i) h1m[i] = std::max(0.0, z1[i]);
  if (dropout && dropout->active()) {
    mask1 = draw_mask(*dropout->rng, dropout->rate, h1m.size());
    for (std::size_t i = 0; i < h1m.size(); ++i) h1m[i] *= mask1[i];
  }
  std::vector<double> z2 = affine(ff.w2, ff.b2, h1m);
  std::vector<double> out(z2.size());
  for (std::size_t i = 0; i < z2.size(); ++i) out[i] = std::max(0.0, z2[i]);
  if (cache) {
    cache->mask0 = std::move(mask0);
    cache->mask1 = std::move(mask1);
    cache->xin = std::move(xin);
    cache->z1 = std::move(z1);
    cache->h1m = std::move(h1m);
    cache->z2 = std::move(z2);
  }
  return out;
}

// Accumulates parameter gradients into `gff` (same shapes as ff, zero-ready)
// and writes the input gradient to dx.
void ff_backward(const FeedForward& ff, const FfCache& c, std::span<const double> dout,
                 FeedForward& gff, std::span<double> dx) {
  const std::size_t out_w = ff.w2.rows();
  const std::size_t hid_w = ff.w1.rows();
  std::vector<double> dz2(out_w);
  for (std::size_t i = 0; i < out_w; ++i) dz2[i] = c.z2[i] > 0.0 ? dout[i] : 0.0;
  for (std::size_t i = 0; i < out_w; ++i) {
    auto grow = gff.w2.row(i);
    for (std::size_t j = 0; j < hid_w; ++j) grow[j] += dz2[i] * c.h1m[j];
    gff.b2[i] += dz2[i];
  }
  std::vector<double> dh1(hid_w, 0.0);
  for (std::size_t i = 0; i < out_w; ++i) {
    const auto row = ff.w2.row(i);
    for (std::size_t j = 0; j < hid_w; ++j) dh1[j] += row[j] * dz2[i];
  }
  if (!c.mask1.empty())
    for (std::size_t j = 0; j < hid_w; ++j) dh1[j] *= c.mask1[j];
  std::vector<double> dz1(hid_w);
  for (std::size_t j = 0; j < hid_w; ++j) dz1[j] = c.z1[j] > 0.0 ? dh1[j] : 0.0;
  const std::size_t in_w = ff.w1.cols();
  for (std::size_t i = 0; i < hid_w; ++i) {
    auto grow = gff.w1.row(i);
    for (std::size_t j = 0; j < in_w; ++j) grow[j] += dz1[i] * c.xin[j];
    gff.b1[i] += dz1[i];
  }
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t i = 0; i < hid_w; ++i) {
    const auto row = ff.w1.row(i);
    for (std::size_t j = 0; j < in_w; ++j) dx[j] += row[j] * dz1[i];
  }
  if (!c.mask0.empty())
    for (std::size_t j = 0; j < in_w; ++j) dx[j] *= c.mask0[j];
}

Matrix ff_apply_rows(const FeedForward& ff, const Matrix& x) {
  Matrix out(x.rows(), ff.out_width());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto y = ff_apply(ff, x.row(i), nullptr, nullptr);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return out;
}

void softmax_rows_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto p = numkit::softmax(m.row(i));
    std::copy(p.begin(), p.end(), m.row(i).begin());
  }
}

Matrix softmax_cols(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  std::vector<double> col(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    const auto p = numkit::softmax(col);
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = p[i];
  }
  return out;
}

FeedForward zero_like_ff(const FeedForward& ff) {
  return {Matrix(ff.w1.rows(), ff.w1.cols()), std::vector<double>(ff.b1.size(), 0.0),
          Matrix(ff.w2.rows(), ff.w2.cols()), std::vector<double>(ff.b2.size(), 0.0)};
}

NliModel zero_like(const NliModel& m) {
  NliModel g;
  g.embed_dim = m.embed_dim;
  g.hidden = m.hidden;
  g.projection = Matrix(m.projection.rows(), m.projection.cols());
  g.attend_ff = zero_like_ff(m.attend_ff);
  g.compare_ff = zero_like_ff(m.compare_ff);
  g.aggregate_ff = zero_like_ff(m.aggregate_ff);
  g.output = Matrix(m.output.rows(), m.output.cols());
  g.output_bias.assign(m.output_bias.size(), 0.0);
  g.frozen_embeddings = m.frozen_embeddings;
  return g;
}

}  // namespace

void validate_model(const NliModel& m) {
  const std::size_t d = m.embed_dim, h = m.hidden;
  check_shape(d >= 1 && h >= 1, "model");
  check_shape(m.projection.rows() == h && m.projection.cols() == d, "projection");
  const auto ff_ok = [h](const FeedForward& ff, std::size_t in) {
    return ff.w1.rows() == h && ff.w1.cols() == in && ff.b1.size() == h &&
           ff.w2.rows() == h && ff.w2.cols() == h && ff.b2.size() == h;
  };
  check_shape(ff_ok(m.attend_ff, h), "attention scorer");
  check_shape(ff_ok(m.compare_ff, 2 * h), "comparison net");
  check_shape(ff_ok(m.aggregate_ff, 2 * h), "aggregation net");
  check_shape(m.output.rows() == kNumLabels && m.output.cols() == h, "output head");
  check_shape(m.output_bias.size() == kNumLabels, "output bias");

  check_finite(m.projection, "projection");
  for (const auto* ff : {&m.attend_ff, &m.compare_ff, &m.aggregate_ff}) {
    check_finite(ff->w1, "feed-forward");
    check_finite(ff->w2, "feed-forward");
    for (double v : ff->b1)
      if (!std::isfinite(v)) throw NonFiniteValue("feed-forward: non-finite bias");
    for (double v : ff->b2)
      if (!std::isfinite(v)) throw NonFiniteValue("feed-forward: non-finite bias");
  }
  check_finite(m.output, "output head");
  for (double v : m.output_bias)
    if (!std::isfinite(v)) throw NonFiniteValue("output head: non-finite bias");
}

AttentionTrace attend(const Matrix& premise_vecs, const Matrix& hypothesis_vecs,
                      const NliModel& model) {
  if (premise_vecs.rows() == 0 || hypothesis_vecs.rows() == 0)
    throw EmptySentence("attend: a sentence has no tokens");
  check_shape(premise_vecs.cols() == model.embed_dim &&
                  hypothesis_vecs.cols() == model.embed_dim,
              "attend input");

  AttentionTrace trace;
  trace.premise_proj = numkit::matmul_nt(premise_vecs, model.projection);
  trace.hypothesis_proj = numkit::matmul_nt(hypothesis_vecs, model.projection);
  const Matrix fa = ff_apply_rows(model.attend_ff, trace.premise_proj);
  const Matrix fb = ff_apply_rows(model.attend_ff, trace.hypothesis_proj);
  trace.scores = numkit::matmul_nt(fa, fb);
  trace.weights = trace.scores;
  softmax_rows_inplace(trace.weights);
  trace.beta = numkit::matmul(trace.weights, trace.hypothesis_proj);
  const Matrix col_weights = softmax_cols(trace.scores);
  trace.alpha = numkit::matmul_tn(col_weights, trace.premise_proj);
  return trace;
}

Matrix compare(const Matrix& vecs, const Matrix& aligned, const NliModel& model) {
  if (vecs.rows() != aligned.rows())
    throw LengthMismatch("compare: token and alignment counts disagree");
  check_shape(vecs.cols() == model.hidden && aligned.cols() == model.hidden,
              "compare input");
  Matrix out(vecs.rows(), model.hidden);
  std::vector<double> cat(2 * model.hidden);
  for (std::size_t i = 0; i < vecs.rows(); ++i) {
    std::copy(vecs.row(i).begin(), vecs.row(i).end(), cat.begin());
    std::copy(aligned.row(i).begin(), aligned.row(i).end(), cat.begin() + model.hidden);
    const auto y = ff_apply(model.compare_ff, cat, nullptr, nullptr);
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return out;
}

std::array<double, 3> aggregate(const Matrix& cmp_premise, const Matrix& cmp_hypothesis,
                                const NliModel& model) {
  if (cmp_premise.rows() == 0 || cmp_hypothesis.rows() == 0)
    throw EmptySentence("aggregate: a sentence has no comparison vectors");
  check_shape(cmp_premise.cols() == model.hidden && cmp_hypothesis.cols() == model.hidden,
              "aggregate input");
  std::vector<double> cat(2 * model.hidden, 0.0);
  for (std::size_t i = 0; i < cmp_premise.rows(); ++i) {
    const auto row = cmp_premise.row(i);
    for (std::size_t d = 0; d < model.hidden; ++d) cat[d] += row[d];
  }
  for (std::size_t j = 0; j < cmp_hypothesis.rows(); ++j) {
    const auto row = cmp_hypothesis.row(j);
    for (std::size_t d = 0; d < model.hidden; ++d) cat[model.hidden + d] += row[d];
  }
  const auto u = ff_apply(model.aggregate_ff, cat, nullptr, nullptr);
  std::array<double, 3> scores{};
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    double s = model.output_bias[c];
    const auto row = model.output.row(c);
    for (std::size_t d = 0; d < model.hidden; ++d) s += row[d] * u[d];
    scores[c] = s;
  }
  return scores;
}

Matrix embed_sentence(const EmbeddingSpace& embeddings,
                      std::span<const std::string> tokens, std::size_t* oov_count) {
  Matrix out(tokens.size(), embeddings.dim());
  std::size_t oov = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (const auto v = embeddings.lookup(tokens[i]))
      std::copy(v->begin(), v->end(), out.row(i).begin());
    else
      ++oov;  // row stays zero
  }
  if (oov_count) *oov_count = oov;
  return out;
}

ForwardResult forward(const NliModel& model, const EmbeddingSpace& embeddings,
                      std::span<const std::string> premise,
                      std::span<const std::string> hypothesis, bool want_trace) {
  if (premise.empty() || hypothesis.empty())
    throw EmptySentence("forward: a sentence has no tokens");
  ForwardResult result;
  result.token_count = premise.size() + hypothesis.size();
  std::size_t oov_p = 0, oov_h = 0;
  const Matrix a0 = embed_sentence(embeddings, premise, &oov_p);
  const Matrix b0 = embed_sentence(embeddings, hypothesis, &oov_h);
  result.oov_count = oov_p + oov_h;

  AttentionTrace trace = attend(a0, b0, model);
  const Matrix v1 = compare(trace.premise_proj, trace.beta, model);
  const Matrix v2 = compare(trace.hypothesis_proj, trace.alpha, model);
  const auto scores = aggregate(v1, v2, model);
  const auto probs = numkit::softmax(scores);
  std::copy(probs.begin(), probs.end(), result.probabilities.begin());
  if (want_trace) result.trace = std::move(trace);
  return result;
}

Label argmax_label(const std::array<double, 3>& probabilities) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumLabels; ++c)
    if (probabilities[c] > probabilities[best]) best = c;
  return static_cast<Label>(best);
}

Prediction predict(const NliModel& model, const EmbeddingSpace& embeddings,
                   std::span<const std::string> premise,
                   std::span<const std::string> hypothesis) {
  const auto fwd = forward(model, embeddings, premise, hypothesis);
  return {argmax_label(fwd.probabilities), fwd.probabilities, fwd.oov_count,
          fwd.token_count};
}

NliModel init_model(std::size_t embed_dim, const TrainConfig& cfg) {
  if (embed_dim < 1) throw ShapeMismatch("init_model: embedding dimension must be >= 1");
  const std::size_t h = cfg.hidden;
  Rng rng(Rng::derive(cfg.seed, "nli-init"));
  const auto glorot = [&rng](Matrix& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.flat()) v = rng.uniform(-limit, limit);
  };
  const auto make_ff = [&](std::size_t in) {
    FeedForward ff{Matrix(h, in), std::vector<double>(h, 0.0), Matrix(h, h),
                   std::vector<double>(h, 0.0)};
    glorot(ff.w1);
    glorot(ff.w2);
    return ff;
  };
  NliModel m;
  m.embed_dim = embed_dim;
  m.hidden = h;
  m.projection = Matrix(h, embed_dim);
  glorot(m.projection);
  m.attend_ff = make_ff(h);
  m.compare_ff = make_ff(2 * h);
  m.aggregate_ff = make_ff(2 * h);
  m.output = Matrix(kNumLabels, h);
  glorot(m.output);
  m.output_bias.assign(kNumLabels, 0.0);
  m.frozen_embeddings = cfg.freeze_embeddings;
  return m;
}

namespace {

// Forward and backward for one example. Parameter gradients accumulate into
// `grads`; when da0/db0 are given, the raw-embedding gradients are written
// there (overwritten, m x d / n x d).
double example_loss_grad(const NliModel& model, const Matrix& a0, const Matrix& b0,
                         Label gold, NliModel& grads, Matrix* da0, Matrix* db0,
                         DropoutState* dropout) {
  const std::size_t m = a0.rows(), n = b0.rows(), h = model.hidden;
  if (m == 0 || n == 0) throw EmptySentence("training example has an empty sentence");

  // ---- forward ----
  const Matrix a = numkit::matmul_nt(a0, model.projection);  // m x h
  const Matrix b = numkit::matmul_nt(b0, model.projection);  // n x h
  std::vector<FfCache> cache_fa(m), cache_fb(n);
  Matrix fa(m, h), fb(n, h);
  for (std::size_t i = 0; i < m; ++i) {
    const auto y = ff_apply(model.attend_ff, a.row(i), &cache_fa[i], dropout);
    std::copy(y.begin(), y.end(), fa.row(i).begin());
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto y = ff_apply(model.attend_ff, b.row(j), &cache_fb[j], dropout);
    std::copy(y.begin(), y.end(), fb.row(j).begin());
  }
  const Matrix e = numkit::matmul_nt(fa, fb);  // m x n
  Matrix r = e;
  softmax_rows_inplace(r);
  const Matrix c = softmax_cols(e);
  const Matrix beta = numkit::matmul(r, b);     // m x h
  const Matrix alpha = numkit::matmul_tn(c, a); // n x h

  std::vector<FfCache> cache_v1(m), cache_v2(n);
  Matrix v1(m, h), v2(n, h);
  std::vector<double> cat(2 * h);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), cat.begin());
    std::copy(beta.row(i).begin(), beta.row(i).end(), cat.begin() + h);
    const auto y = ff_apply(model.compare_ff, cat, &cache_v1[i], dropout);
    std::copy(y.begin(), y.end(), v1.row(i).begin());
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::copy(b.row(j).begin(), b.row(j).end(), cat.begin());
    std::copy(alpha.row(j).begin(), alpha.row(j).end(), cat.begin() + h);
    const auto y = ff_apply(model.compare_ff, cat, &cache_v2[j], dropout);
    std::copy(y.begin(), y.end(), v2.row(j).begin());
  }

  std::vector<double> z(2 * h, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t d = 0; d < h; ++d) z[d] += v1(i, d);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t d = 0; d < h; ++d) z[h + d] += v2(j, d);
  FfCache cache_u;
  const auto u = ff_apply(model.aggregate_ff, z, &cache_u, dropout);

  std::vector<double> scores(kNumLabels);
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    double s = model.output_bias[k];
    const auto row = model.output.row(k);
    for (std::size_t d = 0; d < h; ++d) s += row[d] * u[d];
    scores[k] = s;
  }
  const auto probs = numkit::softmax(scores);
  const double loss = -std::log(std::max(probs[static_cast<std::size_t>(gold)], 1e-300));

  // ---- backward ----
  std::vector<double> ds(probs.begin(), probs.end());
  ds[static_cast<std::size_t>(gold)] -= 1.0;

  std::vector<double> du(h, 0.0);
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    auto grow = grads.output.row(k);
    const auto row = model.output.row(k);
    for (std::size_t d = 0; d < h; ++d) {
      grow[d] += ds[k] * u[d];
      du[d] += row[d] * ds[k];
    }
    grads.output_bias[k] += ds[k];
  }

  std::vector<double> dz(2 * h);
  ff_backward(model.aggregate_ff, cache_u, du, grads.aggregate_ff, dz);

  Matrix da(m, h), db(n, h);      // gradients on projected vectors
  Matrix dbeta(m, h), dalpha(n, h);
  std::vector<double> dcat(2 * h);
  for (std::size_t i = 0; i < m; ++i) {
    ff_backward(model.compare_ff, cache_v1[i], std::span(dz).subspan(0, h),
                grads.compare_ff, dcat);
    for (std::size_t d = 0; d < h; ++d) {
      da(i, d) += dcat[d];
      dbeta(i, d) = dcat[h + d];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    ff_backward(model.compare_ff, cache_v2[j], std::span(dz).subspan(h, h),
                grads.compare_ff, dcat);
    for (std::size_t d = 0; d < h; ++d) {
      db(j, d) += dcat[d];
      dalpha(j, d) = dcat[h + d];
    }
  }

  // beta = R B and alpha = C^T A.
  const Matrix dr = numkit::matmul_nt(dbeta, b);   // m x n
  {
    const Matrix db_from_beta = numkit::matmul_tn(r, dbeta);  // n x h
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t d = 0; d < h; ++d) db(j, d) += db_from_beta(j, d);
  }
  const Matrix dc = numkit::matmul_nt(a, dalpha);  // m x n
  {
    const Matrix da_from_alpha = numkit::matmul(c, dalpha);  // m x h
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t d = 0; d < h; ++d) da(i, d) += da_from_alpha(i, d);
  }

  // Softmax backward, rows of R and columns of C.
  Matrix de(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += dr(i, j) * r(i, j);
    for (std::size_t j = 0; j < n; ++j) de(i, j) = r(i, j) * (dr(i, j) - dot);
  }
  for (std::size_t j = 0; j < n; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) dot += dc(i, j) * c(i, j);
    for (std::size_t i = 0; i < m; ++i) de(i, j) += c(i, j) * (dc(i, j) - dot);
  }

  // e = FA FB^T.
  const Matrix dfa = numkit::matmul(de, fb);     // m x h
  const Matrix dfb = numkit::matmul_tn(de, fa);  // n x h

  std::vector<double> dx(h);
  for (std::size_t i = 0; i < m; ++i) {
    ff_backward(model.attend_ff, cache_fa[i], dfa.row(i), grads.attend_ff, dx);
    for (std::size_t d = 0; d < h; ++d) da(i, d) += dx[d];
  }
  for (std::size_t j = 0; j < n; ++j) {
    ff_backward(model.attend_ff, cache_fb[j], dfb.row(j), grads.attend_ff, dx);
    for (std::size_t d = 0; d < h; ++d) db(j, d) += dx[d];
  }

  // a = a0 P^T: dP = da^T a0 (+ same from b); da0 = da P.
  {
    const Matrix dp_a = numkit::matmul_tn(da, a0);
    const Matrix dp_b = numkit::matmul_tn(db, b0);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < model.embed_dim; ++j)
        grads.projection(i, j) += dp_a(i, j) + dp_b(i, j);
  }
  if (da0) *da0 = numkit::matmul(da, model.projection);
  if (db0) *db0 = numkit::matmul(db, model.projection);
  return loss;
}

void append_matrix(std::vector<double>& out, const Matrix& m) {
  out.insert(out.end(), m.flat().begin(), m.flat().end());
}

void append_ff(std::vector<double>& out, const FeedForward& ff) {
  append_matrix(out, ff.w1);
  out.insert(out.end(), ff.b1.begin(), ff.b1.end());
  append_matrix(out, ff.w2);
  out.insert(out.end(), ff.b2.begin(), ff.b2.end());
}

std::size_t take_matrix(Matrix& m, std::span<const double> params, std::size_t at) {
  std::copy(params.begin() + at, params.begin() + at + m.size(), m.flat().begin());
  return at + m.size();
}

std::size_t take_vector(std::vector<double>& v, std::span<const double> params,
                        std::size_t at) {
  std::copy(params.begin() + at, params.begin() + at + v.size(), v.begin());
  return at + v.size();
}

std::size_t take_ff(FeedForward& ff, std::span<const double> params, std::size_t at) {
  at = take_matrix(ff.w1, params, at);
  at = take_vector(ff.b1, params, at);
  at = take_matrix(ff.w2, params, at);
  at = take_vector(ff.b2, params, at);
  return at;
}

}  // namespace

std::vector<double> flatten_params(const NliModel& model) {
  std::vector<double> out;
  append_matrix(out, model.projection);
  append_ff(out, model.attend_ff);
  append_ff(out, model.compare_ff);
  append_ff(out, model.aggregate_ff);
  append_matrix(out, model.output);
  out.insert(out.end(), model.output_bias.begin(), model.output_bias.end());
  return out;
}

void unflatten_params(NliModel& model, std::span<const double> params) {
  std::size_t expect = model.projection.size() + model.output.size() +
                       model.output_bias.size();
  for (const auto* ff : {&model.attend_ff, &model.compare_ff, &model.aggregate_ff})
    expect += ff->w1.size() + ff->b1.size() + ff->w2.size() + ff->b2.size();
  if (params.size() != expect)
    throw ShapeMismatch("unflatten_params: parameter count disagrees with model shape");
  std::size_t at = take_matrix(model.projection, params, 0);
  at = take_ff(model.attend_ff, params, at);
  at = take_ff(model.compare_ff, params, at);
  at = take_ff(model.aggregate_ff, params, at);
  at = take_matrix(model.output, params, at);
  take_vector(model.output_bias, params, at);
}

BatchGrad batch_loss_grad(const NliModel& model, const EmbeddingSpace& embeddings,
                          std::span<const NliExample> batch, bool want_embedding_grad) {
  if (batch.empty()) throw EmptyDataset("batch_loss_grad: empty batch");
  NliModel grads = zero_like(model);
  BatchGrad out;
  if (want_embedding_grad)
    out.embedding_grad = Matrix(embeddings.vocab.size(), embeddings.dim());
  Matrix da0, db0;
  double total = 0.0;
  for (const auto& ex : batch) {
    const Matrix a0 = embed_sentence(embeddings, ex.premise);
    const Matrix b0 = embed_sentence(embeddings, ex.hypothesis);
    total += example_loss_grad(model, a0, b0, ex.gold, grads,
                               want_embedding_grad ? &da0 : nullptr,
                               want_embedding_grad ? &db0 : nullptr, nullptr);
    if (want_embedding_grad) {
      const auto scatter = [&](std::span<const std::string> tokens, const Matrix& dm) {
        for (std::size_t t = 0; t < tokens.size(); ++t)
          if (const auto idx = embeddings.vocab.find(tokens[t])) {
            auto row = out.embedding_grad.row(*idx);
            for (std::size_t d = 0; d < embeddings.dim(); ++d) row[d] += dm(t, d);
          }
      };
      scatter(ex.premise, da0);
      scatter(ex.hypothesis, db0);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss = total * inv;
  out.model_grad = flatten_params(grads);
  for (double& g : out.model_grad) g *= inv;
  if (want_embedding_grad)
    for (double& g : out.embedding_grad.flat()) g *= inv;
  return out;
}

TrainResult train_nli(std::span<const NliExample> train,
                      const EmbeddingSpace& embeddings, const TrainConfig& cfg) {
  if (train.empty()) throw EmptyDataset("train_nli: no training examples");

  TrainResult result;
  result.model = init_model(embeddings.dim(), cfg);
  NliModel& model = result.model;

  EmbeddingSpace tuned;  // live table when embeddings are not frozen
  if (!cfg.freeze_embeddings) tuned = embeddings;
  const EmbeddingSpace& table = cfg.freeze_embeddings ? embeddings : tuned;

  std::vector<double> params = flatten_params(model);
  numkit::Optimizer opt(cfg.optimizer, cfg.learning_rate);
  numkit::Optimizer embed_opt(cfg.optimizer, cfg.learning_rate);

  Rng shuffle_rng(Rng::derive(cfg.seed, "nli-shuffle"));
  Rng dropout_rng(Rng::derive(cfg.seed, "nli-dropout"));
  DropoutState dropout{&dropout_rng, cfg.dropout};

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_size);
  Matrix embed_grad;
  if (!cfg.freeze_embeddings) embed_grad = Matrix(table.vocab.size(), table.dim());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      NliModel grads = zero_like(model);
      if (!cfg.freeze_embeddings) std::fill(embed_grad.flat().begin(), embed_grad.flat().end(), 0.0);

      Matrix da0, db0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& ex = train[order[b]];
        const Matrix a0 = embed_sentence(table, ex.premise);
        const Matrix b0 = embed_sentence(table, ex.hypothesis);
        epoch_loss += example_loss_grad(
            model, a0, b0, ex.gold, grads,
            cfg.freeze_embeddings ? nullptr : &da0,
            cfg.freeze_embeddings ? nullptr : &db0,
            dropout.active() ? &dropout : nullptr);
        if (!cfg.freeze_embeddings) {
          const auto scatter = [&](std::span<const std::string> tokens, const Matrix& dm) {
            for (std::size_t t = 0; t < tokens.size(); ++t)
              if (const auto idx = table.vocab.find(tokens[t])) {
                auto row = embed_grad.row(*idx);
                for (std::size_t d = 0; d < table.dim(); ++d) row[d] += dm(t, d);
              }
          };
          scatter(ex.premise, da0);
          scatter(ex.hypothesis, db0);
        }
      }

      const double inv = 1.0 / static_cast<double>(stop - start);
      std::vector<double> grad = flatten_params(grads);
      for (double& g : grad) g *= inv;
      opt.step(params, grad);
      unflatten_params(model, params);
      if (!cfg.freeze_embeddings) {
        for (double& g : embed_grad.flat()) g *= inv;
        embed_opt.step(tuned.matrix.flat(), embed_grad.flat());
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(train.size()));
  }

  if (!cfg.freeze_embeddings) result.tuned_embeddings = std::move(tuned);
  return result;
}

// ---- serialization ----

namespace {

void write_matrix_block(std::ostream& out, const char* name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ' ';
      out << ingest::format_double(row[j]);
    }
    out << '\n';
  }
}

void write_vector_block(std::ostream& out, const char* name,
                        const std::vector<double>& v) {
  out << "vector " << name << ' ' << v.size() << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out << ' ';
    out << ingest::format_double(v[i]);
  }
  out << '\n';
}

class BlockReader {
 public:
  BlockReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s))
      throw ParseError(path_ + ": unexpected end of file");
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
  }

  std::vector<std::string> fields() {
    std::istringstream ss(line());
    std::vector<std::string> out;
    std::string f;
    while (ss >> f) out.push_back(f);
    return out;
  }

  Matrix matrix(const std::string& name) {
    const auto head = fields();
    if (head.size() != 4 || head[0] != "matrix" || head[1] != name)
      throw HeaderMismatch(path_ + ": expected matrix block '" + name + "'");
    const std::size_t rows = parse_size(head[2]), cols = parse_size(head[3]);
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto vals = fields();
      if (vals.size() != cols)
        throw HeaderMismatch(path_ + ": matrix '" + name + "' row width disagrees");
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = parse_value(vals[j]);
    }
    return m;
  }

  std::vector<double> vector(const std::string& name) {
    const auto head = fields();
    if (head.size() != 3 || head[0] != "vector" || head[1] != name)
      throw HeaderMismatch(path_ + ": expected vector block '" + name + "'");
    const std::size_t n = parse_size(head[2]);
    const auto vals = fields();
    if (vals.size() != n)
      throw HeaderMismatch(path_ + ": vector '" + name + "' length disagrees");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = parse_value(vals[i]);
    return v;
  }

  double parse_value(const std::string& s) {
    try {
      return ingest::parse_double(s);
    } catch (const ParseError&) {
      throw ParseError(path_ + ": bad number '" + s + "'");
    }
  }

  std::size_t parse_size(const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw ParseError(path_ + ": bad count '" + s + "'");
    }
    if (pos != s.size()) throw ParseError(path_ + ": bad count '" + s + "'");
    return static_cast<std::size_t>(v);
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_model(const NliModel& model, const std::filesystem::path& path) {
  validate_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "nli-model 1\n";
  out << "embed_dim " << model.embed_dim << '\n';
  out << "hidden " << model.hidden << '\n';
  out << "labels";
  for (const Label label : kLabelOrder) out << ' ' << render_label(label);
  out << '\n';
  out << "frozen_embeddings " << (model.frozen_embeddings ? 1 : 0) << '\n';
  write_matrix_block(out, "projection", model.projection);
  const auto write_ff = [&out](const char* prefix, const FeedForward& ff) {
    write_matrix_block(out, (std::string(prefix) + "_w1").c_str(), ff.w1);
    write_vector_block(out, (std::string(prefix) + "_b1").c_str(), ff.b1);
    write_matrix_block(out, (std::string(prefix) + "_w2").c_str(), ff.w2);
    write_vector_block(out, (std::string(prefix) + "_b2").c_str(), ff.b2);
  };
  write_ff("attend", model.attend_ff);
  write_ff("compare", model.compare_ff);
  write_ff("aggregate", model.aggregate_ff);
  write_matrix_block(out, "output", model.output);
  write_vector_block(out, "output_bias", model.output_bias);
  out << "end\n";
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

NliModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  BlockReader reader(in, path.string());

  if (reader.line() != "nli-model 1")
    throw HeaderMismatch(path.string() + ": not a model file");
  const auto dim_f = reader.fields();
  if (dim_f.size() != 2 || dim_f[0] != "embed_dim")
    throw HeaderMismatch(path.string() + ": missing embed_dim");
  const auto hid_f = reader.fields();
  if (hid_f.size() != 2 || hid_f[0] != "hidden")
    throw HeaderMismatch(path.string() + ": missing hidden");

  NliModel m;
  m.embed_dim = reader.parse_size(dim_f[1]);
  m.hidden = reader.parse_size(hid_f[1]);

  const auto labels = reader.fields();
  if (labels.size() != 1 + kNumLabels || labels[0] != "labels")
    throw HeaderMismatch(path.string() + ": missing label order");
  for (std::size_t i = 0; i < kNumLabels; ++i)
    if (labels[1 + i] != render_label(kLabelOrder[i]))
      throw HeaderMismatch(path.string() + ": label order disagrees");

  const auto frozen = reader.fields();
  if (frozen.size() != 2 || frozen[0] != "frozen_embeddings" ||
      (frozen[1] != "0" && frozen[1] != "1"))
    throw HeaderMismatch(path.string() + ": missing frozen_embeddings flag");
  m.frozen_embeddings = frozen[1] == "1";

  m.projection = reader.matrix("projection");
  const auto read_ff = [&reader](const std::string& prefix) {
    FeedForward ff;
    ff.w1 = reader.matrix(prefix + "_w1");
    ff.b1 = reader.vector(prefix + "_b1");
    ff.w2 = reader.matrix(prefix + "_w2");
    ff.b2 = reader.vector(prefix + "_b2");
    return ff;
  };
  m.attend_ff = read_ff("attend");
  m.compare_ff = read_ff("compare");
  m.aggregate_ff = read_ff("aggregate");
  m.output = reader.matrix("output");
  m.output_bias = reader.vector("output_bias");
  if (reader.line() != "end")
    throw HeaderMismatch(path.string() + ": missing end marker");
  validate_model(m);
  return m;
}

}  // namespace xnli::nli
