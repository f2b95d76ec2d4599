#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "conekit/cone.hpp"
#include "conekit/errors.hpp"
#include "conekit/random.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

/**
 * @brief Parameters of P = rho Gamma Theta B Theta' Gamma.
 *
 * Rows of Theta have unit l_p norm (p = 1 DCMMSB, p = 2 OCCAM) and
 * sum(Gamma) = n. `Z_binary` is set for overlapping SBM memberships.
 */
struct NetworkParams {
  Matrix Theta;
  Vector Gamma;
  Matrix B;
  double rho = 1.0;
  int p = 1;
  std::optional<Eigen::MatrixXi> Z_binary;
};

/// T is V x K, H is K x D; both column-stochastic.
struct TopicParams {
  Matrix T;
  Matrix H;
  long N = 0;
  Index K = 0;
};

struct SplitCounts {
  SparseCounts A1;
  SparseCounts A2;
};

struct FitOptions {
  std::optional<double> delta;  // fixed band width; otherwise auto_delta
  DeltaSchedule schedule;
  ConeOptions cone;
  EigOptions eig{.order = EigenOrder::algebraic};
};

struct NetworkFit {
  NetworkParams params;
  ConeSolution cone;
  Spectrum spectrum;
  ConeDiagnostics diagnostics;
  std::vector<std::string> warnings;
};

struct TopicFit {
  Matrix T;
  ConeSolution cone;
  Spectrum spectrum;
  ConeDiagnostics diagnostics;
  std::vector<std::string> warnings;
};

namespace detail {

inline ConeSolution run_cone(const Matrix& Z, Index k, const FitOptions& opt) {
  if (opt.delta) return svm_cone(Z, k, *opt.delta, opt.cone);
  return auto_delta(Z, k, opt.schedule, opt.cone);
}

inline double lp_norm(const Eigen::Ref<const Eigen::RowVectorXd>& v, int p) {
  return p == 1 ? v.cwiseAbs().sum() : v.norm();
}

inline void check_zero_rows(const Matrix& V, const char* what) {
  std::vector<std::size_t> bad;
  const Vector norms = V.rowwise().norm();
  for (Index i = 0; i < V.rows(); ++i) {
    if (!(norms(i) >= 1e-300)) bad.push_back(static_cast<std::size_t>(i));
  }
  if (!bad.empty()) {
    throw Error(ErrorKind::degenerate_row, std::string(what) + " " + join_indices(bad) +
                                               " have zero eigenvector rows; remove them first",
                bad);
  }
}

/**
 * Algorithm steps after the eigendecomposition: corners from SVM-cone on
 * V, D = sqrt(diag(Y_C E Y_C')), Theta = F^{-1} M D (clipped, re-normalized),
 * Gamma = n F / 1'F1, B = Gamma_C^{-1} V_C E V_C' Gamma_C^{-1} / max entry.
 */
inline NetworkFit network_from_spectrum(Spectrum spec, Index k, int p, const FitOptions& opt) {
  if (p != 1 && p != 2) throw Error(ErrorKind::input, "row-norm flavor p must be 1 or 2");
  const Matrix& V = spec.vectors;
  const Vector& E = spec.values;
  const Index n = V.rows();
  check_zero_rows(V, "nodes");

  NetworkFit fit;
  fit.cone = run_cone(V, k, opt);
  const auto& C = fit.cone.corners;
  const Matrix& Yc = fit.cone.corner_rows;

  Vector D(k);
  for (Index c = 0; c < k; ++c) {
    const double d2 = (Yc.row(c).array().square() * E.transpose().array()).sum();
    if (d2 < -1e-8) {
      throw Error(ErrorKind::spectrum_inconsistency,
                  "negative degree-scale estimate " + std::to_string(d2) + " at corner " +
                      std::to_string(C[static_cast<std::size_t>(c)]),
                  {C[static_cast<std::size_t>(c)]});
    }
    D(c) = std::sqrt(std::max(d2, 0.0));
  }

  const Matrix MD = fit.cone.M * D.asDiagonal();
  Vector F(n);
  Matrix Theta(n, k);
  for (Index i = 0; i < n; ++i) {
    F(i) = lp_norm(MD.row(i), p);
    Eigen::RowVectorXd row = MD.row(i).cwiseMax(0.0);
    const double norm = lp_norm(row, p);
    if (norm > 0.0) {
      Theta.row(i) = row / norm;
    } else {
      Index arg = 0;
      MD.row(i).maxCoeff(&arg);
      Theta.row(i).setZero();
      Theta(i, arg) = 1.0;
      fit.warnings.push_back("node " + std::to_string(i) + " had no positive membership weight");
    }
  }
  const double total = F.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::spectrum_inconsistency, "degree estimates sum to zero");
  Vector Gamma = F * (static_cast<double>(n) / total);

  Matrix Vc(k, V.cols());
  Vector gamma_c(k);
  for (Index c = 0; c < k; ++c) {
    Vc.row(c) = V.row(static_cast<Index>(C[static_cast<std::size_t>(c)]));
    gamma_c(c) = Gamma(static_cast<Index>(C[static_cast<std::size_t>(c)]));
  }
  if (!(gamma_c.minCoeff() > 0.0)) throw Error(ErrorKind::spectrum_inconsistency, "zero degree estimate at a corner");
  Matrix B = gamma_c.cwiseInverse().asDiagonal() * (Vc * E.asDiagonal() * Vc.transpose()) *
             gamma_c.cwiseInverse().asDiagonal();
  B = 0.5 * (B + B.transpose()).eval();
  Index mi = 0, mj = 0;
  const double bmax = B.maxCoeff(&mi, &mj);
  if (!(bmax > 0.0)) throw Error(ErrorKind::spectrum_inconsistency, "block matrix has no positive entry");
  B /= bmax;
  if (mi != mj) fit.warnings.push_back("largest block-matrix entry is off-diagonal");
  if (B.minCoeff() < 0.0) {
    fit.warnings.push_back("negative block-matrix entries clipped to 0 (min " + std::to_string(B.minCoeff()) + ")");
    B = B.cwiseMax(0.0);
  }

  fit.params.Theta = std::move(Theta);
  fit.params.Gamma = std::move(Gamma);
  fit.params.B = std::move(B);
  fit.params.rho = 1.0;  // absorbed into B by the max-entry rescale
  fit.params.p = p;
  fit.diagnostics = check_condition(Yc);
  fit.spectrum = std::move(spec);
  return fit;
}

}  // namespace detail

/// DCMMSB (p = 1) or OCCAM (p = 2) estimation from an observed adjacency matrix.
inline NetworkFit fit_dcmmsb(const SparseSymAdjacency& A, Index k, int p, const FitOptions& opt = {}) {
  if (A.n() == 0) throw Error(ErrorKind::dimension, "empty adjacency matrix");
  if (k < 2) throw Error(ErrorKind::dimension, "network models need K >= 2");
  const auto isolated = A.isolated_nodes();
  if (!isolated.empty()) {
    throw Error(ErrorKind::degenerate_row, "isolated nodes " + detail::join_indices(isolated) + "; remove them first",
                isolated);
  }
  return detail::network_from_spectrum(top_k_eigs(A, k, opt.eig), k, p, opt);
}

/// Same estimator on a dense symmetric matrix, e.g. the population P itself.
inline NetworkFit fit_dcmmsb(const Matrix& P, Index k, int p, const FitOptions& opt = {}) {
  if (P.rows() == 0) throw Error(ErrorKind::dimension, "empty matrix");
  if (k < 2) throw Error(ErrorKind::dimension, "network models need K >= 2");
  return detail::network_from_spectrum(top_k_eigs(P, k, opt.eig), k, p, opt);
}

/// Binary memberships from the p = 1 fit: Theta >= 1/K, never an all-false row.
inline Eigen::MatrixXi threshold_memberships(const Matrix& Theta) {
  const double cut = 1.0 / static_cast<double>(Theta.cols()) - 1e-9;
  Eigen::MatrixXi Z = (Theta.array() >= cut).cast<int>();
  for (Index i = 0; i < Z.rows(); ++i) {
    if (Z.row(i).sum() == 0) {
      Index arg = 0;
      Theta.row(i).maxCoeff(&arg);
      Z(i, arg) = 1;
    }
  }
  return Z;
}

template <class Input>
NetworkFit fit_sbmo(const Input& A, Index k, const FitOptions& opt = {}) {
  NetworkFit fit = fit_dcmmsb(A, k, 1, opt);
  fit.params.Z_binary = threshold_memberships(fit.params.Theta);
  return fit;
}

/**
 * @brief Splits each document's tokens uniformly at random into halves.
 *
 * Document d with n_d tokens sends exactly floor(n_d / 2) of them to A2.
 * Cells are visited in word order and each unit goes to A2 with
 * probability (draws left)/(units left): a multivariate hypergeometric
 * draw without listing tokens. Keyed by (seed, doc index).
 */
inline SplitCounts split_documents(const SparseCounts& A, std::uint64_t seed) {
  std::vector<CountEntry> e1, e2;
  e1.reserve(A.entries().size());
  e2.reserve(A.entries().size());
  const auto totals = A.doc_totals();
  for (std::size_t d = 0; d < A.cols(); ++d) {
    auto gen = rng::keyed(seed, rng::Stream::split, d);
    long units_left = totals[d];
    long draws_left = totals[d] / 2;
    const auto [begin, end] = A.doc_range(d);
    for (std::size_t t = begin; t < end; ++t) {
      const auto& cell = A.entries()[t];
      long to_second = 0;
      for (long u = 0; u < cell.count; ++u) {
        if (draws_left > 0 &&
            rng::uniform01(gen) * static_cast<double>(units_left) < static_cast<double>(draws_left)) {
          ++to_second;
          --draws_left;
        }
        --units_left;
      }
      if (cell.count - to_second > 0) e1.push_back({cell.word, d, cell.count - to_second});
      if (to_second > 0) e2.push_back({cell.word, d, to_second});
    }
  }
  return {SparseCounts(A.rows(), A.cols(), std::move(e1)), SparseCounts(A.rows(), A.cols(), std::move(e2))};
}

namespace detail {

inline SparseMatrix column_l1_normalized(const SparseCounts& A) {
  SparseMatrix m = A.to_eigen();
  const auto totals = A.doc_totals();
  for (Index c = 0; c < m.outerSize(); ++c) {
    const double t = static_cast<double>(totals[static_cast<std::size_t>(c)]);
    if (t <= 0.0) continue;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) it.valueRef() /= t;
  }
  return m;
}

inline TopicFit topics_from_gram(const Matrix& U, Index k, const FitOptions& opt) {
  std::vector<std::size_t> zero_words;
  for (Index w = 0; w < U.rows(); ++w) {
    if (U.row(w).cwiseAbs().maxCoeff() == 0.0) zero_words.push_back(static_cast<std::size_t>(w));
  }
  if (!zero_words.empty()) {
    throw Error(ErrorKind::degenerate_row, "words " + join_indices(zero_words) + " have empty co-occurrence rows",
                zero_words);
  }
  TopicFit fit;
  fit.spectrum = top_k_svd(U, k, opt.eig);
  const double s1 = fit.spectrum.values(0);
  const double sk = fit.spectrum.values(k - 1);
  if (!(sk > 1e-12 * s1)) {
    throw Error(ErrorKind::rank, "fewer than K positive singular values (sigma_K = " + std::to_string(sk) + ")");
  }
  check_zero_rows(fit.spectrum.vectors, "words");
  fit.cone = run_cone(fit.spectrum.vectors, k, opt);
  Matrix T = fit.cone.M.cwiseMax(0.0);
  for (Index c = 0; c < k; ++c) {
    const double s = T.col(c).sum();
    if (!(s > 0.0)) throw Error(ErrorKind::rank, "topic column " + std::to_string(c) + " has no positive mass");
    T.col(c) /= s;
  }
  fit.T = std::move(T);
  fit.diagnostics = check_condition(fit.cone.corner_rows);
  return fit;
}

}  // namespace detail

/// Co-occurrence estimate U = A1_hat A2_hat' from pre-split counts.
inline Matrix cooccurrence(const SplitCounts& split) {
  const SparseMatrix a1 = detail::column_l1_normalized(split.A1);
  const SparseMatrix a2 = detail::column_l1_normalized(split.A2);
  const SparseMatrix u = a1 * SparseMatrix(a2.transpose());
  return Matrix(u);
}

inline TopicFit fit_topics(const SplitCounts& split, Index k, const FitOptions& opt = {}) {
  if (static_cast<Index>(split.A1.cols()) < k) throw Error(ErrorKind::dimension, "need at least K documents");
  return detail::topics_from_gram(cooccurrence(split), k, opt);
}

/**
 * @brief Word-topic estimation from a word-by-document count matrix:
 *        split, l1-normalize columns, top-K SVD of A1_hat A2_hat',
 *        SVM-cone on the left singular vectors, clip and column-normalize M.
 */
inline TopicFit fit_topics(const SparseCounts& A, Index k, std::uint64_t seed, const FitOptions& opt = {}) {
  if (k < 1) throw Error(ErrorKind::dimension, "K must be positive");
  const auto totals = A.word_totals();
  std::vector<std::size_t> empty;
  for (std::size_t w = 0; w < totals.size(); ++w) {
    if (totals[w] == 0) empty.push_back(w);
  }
  if (!empty.empty()) {
    throw Error(ErrorKind::degenerate_row, "words " + detail::join_indices(empty) + " never occur; remove them first",
                empty);
  }
  if (static_cast<Index>(A.cols()) < k) throw Error(ErrorKind::dimension, "need at least K documents");
  return fit_topics(split_documents(A, seed), k, opt);
}

/// Population path: U given directly (e.g. the expected co-occurrence T H H' T').
inline TopicFit fit_topics_population(const Matrix& U, Index k, const FitOptions& opt = {}) {
  if (k < 1 || k > std::min(U.rows(), U.cols())) throw Error(ErrorKind::dimension, "K out of range");
  return detail::topics_from_gram(U, k, opt);
}

/// Drops never-occurring words; returns the reduced counts and the kept original word ids.
inline std::pair<SparseCounts, std::vector<std::size_t>> remove_empty_words(const SparseCounts& A) {
  const auto totals = A.word_totals();
  std::vector<std::size_t> kept;
  std::vector<std::size_t> remap(A.rows(), 0);
  for (std::size_t w = 0; w < totals.size(); ++w) {
    if (totals[w] > 0) {
      remap[w] = kept.size();
      kept.push_back(w);
    }
  }
  std::vector<CountEntry> e;
  e.reserve(A.entries().size());
  for (const auto& c : A.entries()) e.push_back({remap[c.word], c.doc, c.count});
  return {SparseCounts(kept.size(), A.cols(), std::move(e)), kept};
}

/// Induced subgraph on nodes with at least one edge; returns it and the kept original node ids.
inline std::pair<SparseSymAdjacency, std::vector<std::size_t>> remove_isolated_nodes(const SparseSymAdjacency& A) {
  const auto deg = A.degrees();
  std::vector<std::size_t> kept;
  std::vector<std::size_t> remap(A.n(), 0);
  for (std::size_t i = 0; i < deg.size(); ++i) {
    if (deg[i] > 0.0) {
      remap[i] = kept.size();
      kept.push_back(i);
    }
  }
  std::vector<Edge> e;
  e.reserve(A.edge_count());
  for (const auto& x : A.entries()) {
    if (x.weight > 0.0) e.push_back({remap[x.i], remap[x.j], x.weight});
  }
  return {SparseSymAdjacency(kept.size(), std::move(e)), kept};
}

/// Rows of M listed in `rows`, in that order.
inline Matrix select_rows(const Matrix& M, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = M.row(static_cast<Index>(rows[i]));
  return out;
}

}  // namespace conekit
