#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "conekit/errors.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

enum class MatchLoss { l1, l2, neg_spearman };

struct MatchResult {
  std::vector<int> permutation;  // est column matched to truth column i
  double loss = 0.0;
  Vector per_column_loss;
};

/**
 * @brief Minimum-cost assignment on a square cost matrix (Hungarian
 *        method with potentials, O(K^3)). Returns assignment[row] = col.
 */
inline std::vector<int> hungarian(const Matrix& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) {
    assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = static_cast<int>(j - 1);
  }
  return assignment;
}

/// Average ranks, ties share the mean rank (1-based).
inline Vector average_ranks(const Eigen::Ref<const Vector>& x) {
  const Index n = x.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return x(a) < x(b); });
  Vector r(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && x(idx[static_cast<std::size_t>(j + 1)]) == x(idx[static_cast<std::size_t>(i)])) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Index t = i; t <= j; ++t) r(idx[static_cast<std::size_t>(t)]) = mean_rank;
    i = j + 1;
  }
  return r;
}

/// Spearman correlation: Pearson correlation of average ranks.
inline double spearman(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension, "spearman length mismatch");
  const Vector ra = average_ranks(a);
  const Vector rb = average_ranks(b);
  const Vector ca = ra.array() - ra.mean();
  const Vector cb = rb.array() - rb.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (!(den > 0.0)) throw Error(ErrorKind::undefined_correlation, "constant column has no rank variance");
  return std::clamp(ca.dot(cb) / den, -1.0, 1.0);
}

namespace detail {

inline double column_loss(const Eigen::Ref<const Vector>& t, const Eigen::Ref<const Vector>& e, MatchLoss loss) {
  switch (loss) {
    case MatchLoss::l1: return (t - e).cwiseAbs().sum();
    case MatchLoss::l2: return (t - e).squaredNorm();
    case MatchLoss::neg_spearman: return -spearman(e, t);
  }
  return 0.0;
}

}  // namespace detail

/**
 * @brief Column permutation of `est` minimizing the summed column loss
 *        against `truth`. Exhaustive for K <= 8, Hungarian above.
 */
inline MatchResult perm_match(const Matrix& truth, const Matrix& est, MatchLoss loss) {
  if (truth.rows() != est.rows() || truth.cols() != est.cols()) {
    throw Error(ErrorKind::dimension, "perm_match shape mismatch");
  }
  const Index k = truth.cols();
  Matrix cost(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) cost(i, j) = detail::column_loss(truth.col(i), est.col(j), loss);
  }
  MatchResult out;
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (Index i = 0; i < k; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
      if (total < best) {
        best = total;
        out.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    out.permutation = hungarian(cost);
  }
  out.per_column_loss.resize(k);
  for (Index i = 0; i < k; ++i) out.per_column_loss(i) = cost(i, out.permutation[static_cast<std::size_t>(i)]);
  out.loss = out.per_column_loss.sum();
  return out;
}

/// Columns of est reordered so column i matches truth column i.
inline Matrix apply_permutation(const Matrix& est, const std::vector<int>& perm) {
  Matrix out(est.rows(), est.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.col(static_cast<Index>(i)) = est.col(perm[i]);
  return out;
}

enum class ErrorNorm { l1, l2 };

/// ||truth - est Pi|| / ||truth|| (entrywise l1 or Frobenius), Pi from perm_match.
inline double rel_error(const Matrix& truth, const Matrix& est, ErrorNorm norm) {
  const MatchResult m = perm_match(truth, est, norm == ErrorNorm::l1 ? MatchLoss::l1 : MatchLoss::l2);
  const Matrix diff = truth - apply_permutation(est, m.permutation);
  if (norm == ErrorNorm::l1) return diff.cwiseAbs().sum() / truth.cwiseAbs().sum();
  return diff.norm() / truth.norm();
}

/// (1/K) max over permutations of the summed per-column Spearman correlations.
inline double rc_avg(const Matrix& truth, const Matrix& est) {
  const MatchResult m = perm_match(truth, est, MatchLoss::neg_spearman);
  return -m.loss / static_cast<double>(truth.cols());
}

/// (1/K) sum_ij |T(i,j) - T_hat(i, pi(j))| with pi from the l1 matching.
inline double l1_topic_error(const Matrix& T, const Matrix& T_hat) {
  const MatchResult m = perm_match(T, T_hat, MatchLoss::l1);
  return m.loss / static_cast<double>(T.cols());
}

}  // namespace conekit
