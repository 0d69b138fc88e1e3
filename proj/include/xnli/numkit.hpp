#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "xnli/error.hpp"

// Deterministic numeric kernels. Everything here is double precision and,
// given identical inputs and seeds, produces identical results run to run.

namespace xnli::numkit {

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> flat() { return {data_.data(), data_.size()}; }
  std::span<const double> flat() const { return {data_.data(), data_.size()}; }

  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // A * B
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // A * B^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // A^T * B
Matrix transpose(const Matrix& a);
double max_abs(const Matrix& a);

// Row-indexed sparse matrix with accumulate-on-insert semantics.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  // Adds v to entry (i, j).
  void add(std::size_t i, std::size_t j, double v);
  // Replaces every stored value by 1.
  void binarize();

  std::size_t nonzeros() const;
  Matrix to_dense() const;

  // Y = A * X and Y = A^T * X for a dense block X.
  Matrix apply(const Matrix& x) const;
  Matrix apply_transposed(const Matrix& x) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  // per row: (column, value), column strictly increasing
  std::vector<std::vector<std::pair<std::size_t, double>>> entries_;
};

// Deterministic random source. The core generator is std::mt19937_64, which
// the standard pins bit-for-bit; all derived draws (uniform, ints, normals,
// shuffles) are implemented here rather than with std distributions, whose
// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling, exact.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller; caches the spare draw.
  double normal();

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives a component seed from a global seed so that adding a component
  // never perturbs the streams of the others. The derivation is FNV-1a over
  // the component name xor-mixed into the seed, finalized by splitmix64.
  static std::uint64_t derive(std::uint64_t global_seed, std::string_view component);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// First-order optimizers over flat parameter blocks.
enum class OptKind { sgd, adagrad };

class Optimizer {
 public:
  Optimizer(OptKind kind, double learning_rate)
      : kind_(kind), learning_rate_(learning_rate) {}

  OptKind kind() const { return kind_; }
  double learning_rate() const { return learning_rate_; }
  std::span<const double> accumulator() const { return accumulator_; }

  // sgd:     p <- p - lr * g
  // adagrad: acc <- acc + g^2; p <- p - lr * g / (sqrt(acc) + eps)
  void step(std::span<double> params, std::span<const double> grads);

  static constexpr double kEpsilon = 1e-8;

 private:
  OptKind kind_;
  double learning_rate_;
  std::vector<double> accumulator_;  // adagrad state, sized on first step
};

inline void optimizer_step(Optimizer& opt, std::span<double> params,
                           std::span<const double> grads) {
  opt.step(params, grads);
}

// Minimizes ||X W - Z||_F^2 via rank-revealing QR. If X is rank deficient the
// solver does not fail: it adds a ridge term lambda = 1e-6 * trace(X^T X) / p
// and reports it through ridge_fallback.
struct LeastSquaresResult {
  Matrix solution;  // p x q
  bool ridge_fallback = false;
};

LeastSquaresResult solve_least_squares(const Matrix& x, const Matrix& z);

// Truncated SVD by seeded randomized subspace iteration. Sweeps until the
// leading singular value estimates change by less than tol relative, or
// max_iters is hit (ConvergenceFailure).
struct SvdConfig {
  std::size_t max_iters = 1000;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

struct TruncatedSvd {
  Matrix u;                            // m x k
  std::vector<double> singular_values; // k, non-increasing
  Matrix v;                            // n x k
};

TruncatedSvd truncated_svd(const Matrix& m, std::size_t k, const SvdConfig& cfg = {});
TruncatedSvd truncated_svd(const SparseMatrix& m, std::size_t k, const SvdConfig& cfg = {});

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> v);

// Central-difference gradient checker. Returns
//   max_i |g_i - ghat_i| / max(1e-8, |g_i| + |ghat_i|).
struct GradProblem {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

double grad_check(const GradProblem& f, std::span<const double> x0, double eps = 1e-4);

}  // namespace xnli::numkit
