#include "xnli/numkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace xnli::numkit {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenRowMajor> as_eigen(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

Eigen::Map<EigenRowMajor> as_eigen(Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()),
          static_cast<Eigen::Index>(m.cols())};
}

Matrix from_eigen(const EigenRowMajor& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  std::memcpy(m.data(), e.data(), sizeof(double) * m.size());
  return m;
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions disagree");
  return from_eigen(as_eigen(a) * as_eigen(b));
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt: inner dimensions disagree");
  return from_eigen(as_eigen(a) * as_eigen(b).transpose());
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeMismatch("matmul_tn: inner dimensions disagree");
  return from_eigen(as_eigen(a).transpose() * as_eigen(b));
}

Matrix transpose(const Matrix& a) { return from_eigen(as_eigen(a).transpose()); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.flat()) m = std::max(m, std::abs(v));
  return m;
}

void SparseMatrix::add(std::size_t i, std::size_t j, double v) {
  auto& row = entries_[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const auto& e, std::size_t col) { return e.first < col; });
  if (it != row.end() && it->first == j)
    it->second += v;
  else
    row.insert(it, {j, v});
}

void SparseMatrix::binarize() {
  for (auto& row : entries_)
    for (auto& [col, v] : row) v = 1.0;
}

std::size_t SparseMatrix::nonzeros() const {
  std::size_t n = 0;
  for (const auto& row : entries_) n += row.size();
  return n;
}

Matrix SparseMatrix::to_dense() const {
  Matrix m(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (const auto& [j, v] : entries_[i]) m(i, j) = v;
  return m;
}

Matrix SparseMatrix::apply(const Matrix& x) const {
  if (x.rows() != cols_) throw ShapeMismatch("sparse apply: dimension disagrees");
  Matrix y(rows_, x.cols());
  for (std::size_t i = 0; i < rows_; ++i) {
    auto out = y.row(i);
    for (const auto& [j, v] : entries_[i]) {
      auto in = x.row(j);
      for (std::size_t c = 0; c < in.size(); ++c) out[c] += v * in[c];
    }
  }
  return y;
}

Matrix SparseMatrix::apply_transposed(const Matrix& x) const {
  if (x.rows() != rows_) throw ShapeMismatch("sparse apply_transposed: dimension disagrees");
  Matrix y(cols_, x.cols());
  for (std::size_t i = 0; i < rows_; ++i) {
    auto in = x.row(i);
    for (const auto& [j, v] : entries_[i]) {
      auto out = y.row(j);
      for (std::size_t c = 0; c < in.size(); ++c) out[c] += v * in[c];
    }
  }
  return y;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw EmptyInput("uniform_int: n must be positive");
  if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
  // reject above the largest multiple of n
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::derive(std::uint64_t global_seed, std::string_view component) {
  return splitmix64(global_seed ^ fnv1a64(component));
}

void Optimizer::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size())
    throw ShapeMismatch("optimizer step: params and grads differ in size");
  if (kind_ == OptKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i] -= learning_rate_ * grads[i];
    return;
  }
  if (accumulator_.empty()) accumulator_.assign(params.size(), 0.0);
  if (accumulator_.size() != params.size())
    throw ShapeMismatch("optimizer step: parameter block size changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    accumulator_[i] += grads[i] * grads[i];
    params[i] -= learning_rate_ * grads[i] / (std::sqrt(accumulator_[i]) + kEpsilon);
  }
}

LeastSquaresResult solve_least_squares(const Matrix& x, const Matrix& z) {
  if (x.rows() == 0) throw EmptyInput("solve_least_squares: no rows");
  if (z.rows() != x.rows())
    throw ShapeMismatch("solve_least_squares: X and Z row counts disagree");

  const auto ex = as_eigen(x);
  const auto ez = as_eigen(z);
  const std::size_t p = x.cols();

  Eigen::ColPivHouseholderQR<EigenRowMajor> qr(ex);
  if (static_cast<std::size_t>(qr.rank()) >= p) {
    return {from_eigen(qr.solve(ez)), false};
  }

  // Rank deficient: ridge on the normal equations.
  EigenRowMajor xtx = ex.transpose() * ex;
  double lambda = 1e-6 * xtx.trace() / static_cast<double>(p);
  if (!(lambda > 0.0)) lambda = 1e-12;
  xtx.diagonal().array() += lambda;
  EigenRowMajor w = xtx.ldlt().solve(ex.transpose() * ez);
  return {from_eigen(w), true};
}

namespace {

// Thin Q factor of an m x l block, m >= l assumed by construction.
EigenRowMajor thin_q(const EigenRowMajor& y) {
  Eigen::HouseholderQR<EigenRowMajor> qr(y);
  return qr.householderQ() * EigenRowMajor::Identity(y.rows(), y.cols());
}

struct SvdOperator {
  std::size_t rows;
  std::size_t cols;
  std::function<Matrix(const Matrix&)> apply;    // A * X
  std::function<Matrix(const Matrix&)> apply_t;  // A^T * X
};

TruncatedSvd truncated_svd_impl(const SvdOperator& op, std::size_t k, const SvdConfig& cfg) {
  const std::size_t m = op.rows;
  const std::size_t n = op.cols;
  const std::size_t bound = std::min(m, n);
  if (k < 1 || k > bound)
    throw RankTooLarge("truncated_svd: k must lie in [1, min(rows, cols)]");

  const std::size_t l = std::min(k + 8, bound);

  // Seeded Gaussian start.
  Rng rng(cfg.seed);
  Matrix g(n, l);
  for (double& v : g.flat()) v = rng.normal();

  Matrix y = op.apply(g);  // m x l
  EigenRowMajor q = thin_q(as_eigen(y));

  std::vector<double> prev(k, std::numeric_limits<double>::infinity());
  bool converged = false;
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    // One power sweep: Q <- orth(A * orth(A^T * Q)).
    Matrix z = op.apply_t(from_eigen(q));  // n x l
    EigenRowMajor qz = thin_q(as_eigen(z));
    Matrix y2 = op.apply(from_eigen(qz));  // m x l
    Eigen::HouseholderQR<EigenRowMajor> qr(as_eigen(y2));
    q = qr.householderQ() * EigenRowMajor::Identity(static_cast<Eigen::Index>(m),
                                                    static_cast<Eigen::Index>(l));

    // |diag(R)| approximates the singular values; track the leading k.
    EigenRowMajor r = qr.matrixQR().topRows(static_cast<Eigen::Index>(l))
                          .triangularView<Eigen::Upper>();
    std::vector<double> est(l);
    for (std::size_t i = 0; i < l; ++i)
      est[i] = std::abs(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    std::sort(est.begin(), est.end(), std::greater<>());
    est.resize(k);

    // Change relative to the spectral norm estimate, so that noise-level
    // trailing values of a rank-deficient input cannot stall convergence.
    const double denom = std::max(est[0], 1e-300);
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      worst = std::max(worst, std::abs(est[i] - prev[i]) / denom);
    prev = est;
    if (worst <= cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceFailure("truncated_svd: no convergence within iteration cap");

  // Project and take the small dense SVD: B = Q^T A, so B^T = A^T Q  (n x l).
  Matrix bt = op.apply_t(from_eigen(q));
  Eigen::JacobiSVD<EigenRowMajor> svd(as_eigen(bt),
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
  // B^T = U_b S V_b^T  =>  A ~ (Q V_b) S U_b^T
  EigenRowMajor u_full = q * svd.matrixV();

  TruncatedSvd out;
  out.u = Matrix(m, k);
  out.v = Matrix(n, k);
  out.singular_values.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    out.singular_values[j] = svd.singularValues()(static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < m; ++i)
      out.u(i, j) = u_full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < n; ++i)
      out.v(i, j) = svd.matrixU()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace

TruncatedSvd truncated_svd(const Matrix& m, std::size_t k, const SvdConfig& cfg) {
  SvdOperator op{m.rows(), m.cols(),
                 [&m](const Matrix& x) { return matmul(m, x); },
                 [&m](const Matrix& x) { return matmul_tn(m, x); }};
  return truncated_svd_impl(op, k, cfg);
}

TruncatedSvd truncated_svd(const SparseMatrix& m, std::size_t k, const SvdConfig& cfg) {
  SvdOperator op{m.rows(), m.cols(),
                 [&m](const Matrix& x) { return m.apply(x); },
                 [&m](const Matrix& x) { return m.apply_transposed(x); }};
  return truncated_svd_impl(op, k, cfg);
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw EmptyVector("softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return out;
}

double grad_check(const GradProblem& f, std::span<const double> x0, double eps) {
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> analytic = f.gradient(x);
  if (analytic.size() != x.size())
    throw ShapeMismatch("grad_check: gradient size disagrees with x0");

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double save = x[i];
    x[i] = save + eps;
    const double fp = f.value(x);
    x[i] = save - eps;
    const double fm = f.value(x);
    x[i] = save;
    const double numeric = (fp - fm) / (2.0 * eps);
    if (!std::isfinite(fp) || !std::isfinite(fm) || !std::isfinite(analytic[i]))
      throw NonFiniteValue("grad_check: non-finite value at probe");
    const double err =
        std::abs(analytic[i] - numeric) /
        std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace xnli::numkit
