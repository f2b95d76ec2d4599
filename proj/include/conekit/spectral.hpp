#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conekit/errors.hpp"
#include "conekit/random.hpp"

namespace conekit {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight = 1.0;
};

/**
 * @brief Undirected graph observation with zero diagonal.
 *
 * Entries are stored once with i < j, sorted. Construction rejects
 * self-loops, duplicate pairs (in either orientation), out-of-range
 * indices and negative or non-finite weights.
 */
class SparseSymAdjacency {
 public:
  SparseSymAdjacency() = default;

  SparseSymAdjacency(std::size_t n, std::vector<Edge> edges) : n_(n), entries_(std::move(edges)) {
    for (auto& e : entries_) {
      if (e.i >= n_ || e.j >= n_) {
        throw Error(ErrorKind::input, "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                                          ") out of range for n=" + std::to_string(n_));
      }
      if (e.i == e.j) {
        throw Error(ErrorKind::input, "self-loop at node " + std::to_string(e.i), {e.i});
      }
      if (!std::isfinite(e.weight) || e.weight < 0.0) {
        throw Error(ErrorKind::data, "edge weight must be finite and non-negative");
      }
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::sort(entries_.begin(), entries_.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    for (std::size_t k = 1; k < entries_.size(); ++k) {
      if (entries_[k].i == entries_[k - 1].i && entries_[k].j == entries_[k - 1].j) {
        throw Error(ErrorKind::input, "duplicate edge (" + std::to_string(entries_[k].i) + "," +
                                          std::to_string(entries_[k].j) + ")",
                    {entries_[k].i, entries_[k].j});
      }
    }
  }

  std::size_t n() const noexcept { return n_; }
  const std::vector<Edge>& entries() const noexcept { return entries_; }
  std::size_t edge_count() const noexcept { return entries_.size(); }

  std::vector<double> degrees() const {
    std::vector<double> d(n_, 0.0);
    for (const auto& e : entries_) {
      d[e.i] += e.weight;
      d[e.j] += e.weight;
    }
    return d;
  }

  /// Nodes with no incident edge of positive weight.
  std::vector<std::size_t> isolated_nodes() const {
    const auto d = degrees();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_; ++i) {
      if (d[i] <= 0.0) out.push_back(i);
    }
    return out;
  }

  SparseMatrix to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * entries_.size());
    for (const auto& e : entries_) {
      t.emplace_back(static_cast<Index>(e.i), static_cast<Index>(e.j), e.weight);
      t.emplace_back(static_cast<Index>(e.j), static_cast<Index>(e.i), e.weight);
    }
    SparseMatrix m(static_cast<Index>(n_), static_cast<Index>(n_));
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  Matrix to_dense() const { return Matrix(to_eigen()); }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> entries_;
};

struct CountEntry {
  std::size_t word;
  std::size_t doc;
  long count;
};

/// Word-by-document count matrix, entries sorted by (doc, word), zeros dropped.
class SparseCounts {
 public:
  SparseCounts() = default;

  SparseCounts(std::size_t rows, std::size_t cols, std::vector<CountEntry> entries)
      : rows_(rows), cols_(cols) {
    entries_.reserve(entries.size());
    for (const auto& e : entries) {
      if (e.word >= rows_ || e.doc >= cols_) {
        throw Error(ErrorKind::input, "count entry (" + std::to_string(e.word) + "," +
                                          std::to_string(e.doc) + ") out of range");
      }
      if (e.count < 0) throw Error(ErrorKind::data, "negative word count");
      if (e.count > 0) entries_.push_back(e);
    }
    std::sort(entries_.begin(), entries_.end(), [](const CountEntry& a, const CountEntry& b) {
      return std::tie(a.doc, a.word) < std::tie(b.doc, b.word);
    });
    for (std::size_t k = 1; k < entries_.size(); ++k) {
      if (entries_[k].doc == entries_[k - 1].doc && entries_[k].word == entries_[k - 1].word) {
        throw Error(ErrorKind::input, "duplicate count entry for word " +
                                          std::to_string(entries_[k].word) + " in doc " +
                                          std::to_string(entries_[k].doc));
      }
    }
    offsets_.assign(cols_ + 1, 0);
    for (const auto& e : entries_) ++offsets_[e.doc + 1];
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const std::vector<CountEntry>& entries() const noexcept { return entries_; }

  /// Entries of one document as a [begin, end) index range into entries().
  std::pair<std::size_t, std::size_t> doc_range(std::size_t d) const {
    return {offsets_[d], offsets_[d + 1]};
  }

  std::vector<long> doc_totals() const {
    std::vector<long> t(cols_, 0);
    for (const auto& e : entries_) t[e.doc] += e.count;
    return t;
  }

  std::vector<long> word_totals() const {
    std::vector<long> t(rows_, 0);
    for (const auto& e : entries_) t[e.word] += e.count;
    return t;
  }

  SparseMatrix to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(entries_.size());
    for (const auto& e : entries_) {
      t.emplace_back(static_cast<Index>(e.word), static_cast<Index>(e.doc),
                     static_cast<double>(e.count));
    }
    SparseMatrix m(static_cast<Index>(rows_), static_cast<Index>(cols_));
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<CountEntry> entries_;
  std::vector<std::size_t> offsets_{0};
};

enum class SpectrumKind { eigen, svd };

/**
 * @brief Top-K eigenpairs or singular triplets.
 *
 * For the eigen kind `values` are signed eigenvalues ordered by
 * decreasing magnitude. For the svd kind `vectors` holds the left
 * singular vectors and `right_vectors` the right ones.
 */
struct Spectrum {
  Matrix vectors;
  Vector values;
  SpectrumKind kind = SpectrumKind::eigen;
  Matrix right_vectors;
  double max_residual = 0.0;  // max_k ||A v_k - lambda_k v_k|| (eigen) or ||U' u_k - s_k v_k|| (svd)
  bool degenerate = false;    // |value_K| negligible relative to |value_1|
  bool iterative = false;
};

struct NormalizedRows {
  Matrix Y;
  Vector norms;
};

/// Which K eigenvalues count as "top": largest |lambda| or largest signed lambda.
enum class EigenOrder { magnitude, algebraic };

struct EigOptions {
  EigenOrder order = EigenOrder::magnitude;
  Index dense_threshold = 2048;
  double tol = 1e-9;
  Index krylov_dim = 0;  // 0 = automatic
  int max_restarts = 5000;
  std::uint64_t seed = 0x5eed;
};

namespace detail {

inline std::vector<Index> order_by_magnitude(const Vector& values, EigenOrder order = EigenOrder::magnitude) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (order == EigenOrder::algebraic) {
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return values(a) > values(b); });
    return idx;
  }
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    const double ma = std::abs(values(a));
    const double mb = std::abs(values(b));
    if (ma != mb) return ma > mb;
    return values(a) > values(b);
  });
  return idx;
}

inline bool is_degenerate(const Vector& values) {
  if (values.size() == 0) return true;
  const double top = std::abs(values(0));
  const double last = std::abs(values(values.size() - 1));
  return top <= 1e-300 || last <= 1e-12 * top;
}

inline void orthogonalize_twice(const Matrix& basis, Index cols, Vector& w) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector h = basis.leftCols(cols).transpose() * w;
    w.noalias() -= basis.leftCols(cols) * h;
  }
}

inline Vector random_unit(Index n, rng::Engine& g) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng::uniform01(g) - 0.5;
  return v / v.norm();
}

/**
 * @brief Thick-restart Lanczos with full reorthogonalization.
 *
 * `apply(x, y)` must write y = A x for a symmetric operator A of order n.
 * Returns the k Ritz pairs of largest magnitude, each with residual
 * ||A v - theta v|| <= tol * |theta_1|.
 */
template <class Apply>
Spectrum lanczos(Index n, Index k, Apply&& apply, const EigOptions& opt) {
  Index m = opt.krylov_dim > 0 ? opt.krylov_dim : std::max<Index>(2 * k + 1, k + 24);
  m = std::min(m, n);
  m = std::max(m, k);

  rng::Engine gen = rng::keyed(opt.seed, rng::Stream::lanczos, 0);
  Matrix V = Matrix::Zero(n, m + 1);
  Matrix H = Matrix::Zero(m, m);
  V.col(0) = random_unit(n, gen);

  Vector w(n);
  Index kept = 0;
  double last_residual = 0.0;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    double beta_m = 0.0;
    for (Index j = kept; j < m; ++j) {
      apply(V.col(j), w);
      Vector h = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * h;
      const Vector h2 = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * h2;
      h += h2;
      H.col(j).head(j + 1) = h;
      H.row(j).head(j + 1) = h.transpose();
      const double beta = w.norm();
      const double scale = std::max(H.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff(), 1e-300);
      const bool breakdown = beta <= 1e-13 * scale || beta == 0.0;
      if (j + 1 < m) {
        if (breakdown) {
          Vector fresh = random_unit(n, gen);
          orthogonalize_twice(V, j + 1, fresh);
          V.col(j + 1) = fresh / fresh.norm();
          H(j + 1, j) = H(j, j + 1) = 0.0;
        } else {
          V.col(j + 1) = w / beta;
          H(j + 1, j) = H(j, j + 1) = beta;
        }
      } else {
        beta_m = (breakdown || m == n) ? 0.0 : beta;
        V.col(m) = beta_m > 0.0 ? Vector(w / beta) : Vector::Zero(n);
      }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const Vector theta = es.eigenvalues();
    const Matrix& S = es.eigenvectors();
    const auto order = order_by_magnitude(theta, opt.order);
    const double scale = std::max(theta.cwiseAbs().maxCoeff(), 1e-300);

    bool all_converged = true;
    last_residual = 0.0;
    for (Index t = 0; t < k; ++t) {
      const double r = std::abs(beta_m * S(m - 1, order[static_cast<std::size_t>(t)]));
      last_residual = std::max(last_residual, r);
      if (r > opt.tol * scale) all_converged = false;
    }

    if (all_converged) {
      Spectrum out;
      out.kind = SpectrumKind::eigen;
      out.iterative = true;
      out.vectors.resize(n, k);
      out.values.resize(k);
      for (Index t = 0; t < k; ++t) {
        const Index c = order[static_cast<std::size_t>(t)];
        out.vectors.col(t) = V.leftCols(m) * S.col(c);
        out.values(t) = theta(c);
      }
      // True residuals, independent of the projected recurrence.
      double worst = 0.0;
      for (Index t = 0; t < k; ++t) {
        apply(out.vectors.col(t), w);
        worst = std::max(worst, (w - out.values(t) * out.vectors.col(t)).norm());
      }
      out.max_residual = worst;
      out.degenerate = is_degenerate(out.values);
      if (worst <= opt.tol * scale * 10.0 || worst <= 1e-300) return out;
      last_residual = worst;
    }

    // Thick restart: keep the best Ritz vectors plus the residual direction.
    const Index keep = std::min<Index>(k + (m - k) / 2, m - 1);
    if (keep < k || beta_m == 0.0) {
      throw Error(ErrorKind::convergence,
                  "Lanczos subspace exhausted without convergence (residual " +
                      std::to_string(last_residual) + ")",
                  {}, last_residual);
    }
    Matrix kept_vectors(n, keep);
    Vector kept_values(keep);
    Vector coupling(keep);
    for (Index t = 0; t < keep; ++t) {
      const Index c = order[static_cast<std::size_t>(t)];
      kept_vectors.col(t) = V.leftCols(m) * S.col(c);
      kept_values(t) = theta(c);
      coupling(t) = beta_m * S(m - 1, c);
    }
    const Vector residual_dir = V.col(m);
    V.setZero();
    V.leftCols(keep) = kept_vectors;
    V.col(keep) = residual_dir;
    H.setZero();
    for (Index t = 0; t < keep; ++t) H(t, t) = kept_values(t);
    H.col(keep).head(keep) = coupling;
    H.row(keep).head(keep) = coupling.transpose();
    kept = keep;
  }
  throw Error(ErrorKind::convergence,
              "Lanczos did not converge after " + std::to_string(opt.max_restarts) +
                  " restarts (residual " + std::to_string(last_residual) + ")",
              {}, last_residual);
}

inline Spectrum dense_top_k_eigs(const Matrix& A, Index k, EigenOrder ord) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::convergence, "dense symmetric eigensolver failed");
  }
  const auto order = order_by_magnitude(es.eigenvalues(), ord);
  Spectrum out;
  out.kind = SpectrumKind::eigen;
  out.vectors.resize(A.rows(), k);
  out.values.resize(k);
  for (Index t = 0; t < k; ++t) {
    const Index c = order[static_cast<std::size_t>(t)];
    out.vectors.col(t) = es.eigenvectors().col(c);
    out.values(t) = es.eigenvalues()(c);
  }
  out.max_residual = (A * out.vectors - out.vectors * out.values.asDiagonal()).colwise().norm().maxCoeff();
  out.degenerate = is_degenerate(out.values);
  return out;
}

inline void check_k(Index k, Index limit, const char* what) {
  if (k < 1 || k > limit) {
    throw Error(ErrorKind::dimension, std::string("K=") + std::to_string(k) + " must lie in [1, " +
                                          std::to_string(limit) + "] for " + what);
  }
}

}  // namespace detail

/// Top-K eigenpairs of a dense symmetric matrix (largest |lambda| unless opt.order says otherwise).
inline Spectrum top_k_eigs(const Matrix& A, Index k, const EigOptions& opt = {}) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::dimension, "matrix must be square");
  detail::check_k(k, A.rows(), "top_k_eigs");
  if (!A.allFinite()) throw Error(ErrorKind::data, "matrix has non-finite entries");
  if (A.rows() <= opt.dense_threshold) return detail::dense_top_k_eigs(A, k, opt.order);
  return detail::lanczos(A.rows(), k,
                         [&A](const auto& x, Vector& y) { y.noalias() = A * x; }, opt);
}

/// Top-K eigenpairs of a sparse symmetric matrix (both triangles stored).
inline Spectrum top_k_eigs(const SparseMatrix& A, Index k, const EigOptions& opt = {}) {
  if (A.rows() != A.cols()) throw Error(ErrorKind::dimension, "matrix must be square");
  detail::check_k(k, A.rows(), "top_k_eigs");
  if (A.rows() <= opt.dense_threshold) return detail::dense_top_k_eigs(Matrix(A), k, opt.order);
  return detail::lanczos(A.rows(), k,
                         [&A](const auto& x, Vector& y) { y.noalias() = A * x; }, opt);
}

inline Spectrum top_k_eigs(const SparseSymAdjacency& A, Index k, const EigOptions& opt = {}) {
  return top_k_eigs(A.to_eigen(), k, opt);
}

namespace detail {

template <class Mat>
Spectrum svd_via_gram(const Mat& U, Index k, const EigOptions& opt) {
  const bool left_side = U.rows() <= U.cols();
  const Index dim = left_side ? U.rows() : U.cols();
  Spectrum gram;
  if (left_side) {
    gram = lanczos(dim, k, [&U](const auto& x, Vector& y) {
      const Vector t = U.transpose() * x;
      y.noalias() = U * t;
    }, opt);
  } else {
    gram = lanczos(dim, k, [&U](const auto& x, Vector& y) {
      const Vector t = U * x;
      y.noalias() = U.transpose() * t;
    }, opt);
  }
  Spectrum out;
  out.kind = SpectrumKind::svd;
  out.iterative = true;
  out.values = gram.values.cwiseMax(0.0).cwiseSqrt();
  if (left_side) {
    out.vectors = gram.vectors;
    out.right_vectors.resize(U.cols(), k);
    for (Index t = 0; t < k; ++t) {
      const Vector r = U.transpose() * gram.vectors.col(t);
      out.right_vectors.col(t) = out.values(t) > 0 ? Vector(r / out.values(t)) : Vector::Zero(U.cols());
    }
  } else {
    out.right_vectors = gram.vectors;
    out.vectors.resize(U.rows(), k);
    for (Index t = 0; t < k; ++t) {
      const Vector l = U * gram.vectors.col(t);
      out.vectors.col(t) = out.values(t) > 0 ? Vector(l / out.values(t)) : Vector::Zero(U.rows());
    }
  }
  return out;
}

inline void finish_svd(Spectrum& s, const Matrix& Ut_u) {
  s.max_residual = 0.0;
  for (Index t = 0; t < s.values.size(); ++t) {
    s.max_residual =
        std::max(s.max_residual, (Ut_u.col(t) - s.values(t) * s.right_vectors.col(t)).norm());
  }
  s.degenerate = is_degenerate(s.values);
}

}  // namespace detail

/// Top-K singular triplets of a dense rectangular matrix.
inline Spectrum top_k_svd(const Matrix& U, Index k, const EigOptions& opt = {}) {
  detail::check_k(k, std::min(U.rows(), U.cols()), "top_k_svd");
  if (!U.allFinite()) throw Error(ErrorKind::data, "matrix has non-finite entries");
  Spectrum out;
  if (std::min(U.rows(), U.cols()) <= opt.dense_threshold) {
    Eigen::BDCSVD<Matrix> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.kind = SpectrumKind::svd;
    out.vectors = svd.matrixU().leftCols(k);
    out.right_vectors = svd.matrixV().leftCols(k);
    out.values = svd.singularValues().head(k);
  } else {
    out = detail::svd_via_gram(U, k, opt);
  }
  detail::finish_svd(out, U.transpose() * out.vectors);
  return out;
}

inline Spectrum top_k_svd(const SparseMatrix& U, Index k, const EigOptions& opt = {}) {
  detail::check_k(k, std::min(U.rows(), U.cols()), "top_k_svd");
  if (std::min(U.rows(), U.cols()) <= opt.dense_threshold) return top_k_svd(Matrix(U), k, opt);
  Spectrum out = detail::svd_via_gram(U, k, opt);
  detail::finish_svd(out, Matrix(U.transpose() * out.vectors));
  return out;
}

/// Scales every row of Z to unit l2 norm. Zero rows are rejected, never dropped.
inline NormalizedRows row_normalize(const Matrix& Z) {
  NormalizedRows out;
  out.norms = Z.rowwise().norm();
  std::vector<std::size_t> bad;
  for (Index i = 0; i < Z.rows(); ++i) {
    if (!(out.norms(i) >= 1e-300)) bad.push_back(static_cast<std::size_t>(i));
  }
  if (!bad.empty()) {
    throw Error(ErrorKind::degenerate_row, "zero rows at " + detail::join_indices(bad), bad);
  }
  out.Y = out.norms.cwiseInverse().asDiagonal() * Z;
  return out;
}

}  // namespace conekit
