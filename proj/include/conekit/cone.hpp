#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "conekit/errors.hpp"
#include "conekit/kmeans.hpp"
#include "conekit/ocsvm.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

/**
 * @brief Output of SVM-cone.
 *
 * `corners` are sorted ascending; column k of `M` and cluster label k
 * both refer to corners[k]. `band` lists the rows within delta_used of
 * the supporting hyperplane and `cluster_labels` runs parallel to it.
 */
struct ConeSolution {
  Matrix M;
  std::vector<std::size_t> corners;
  Hyperplane hyperplane;
  double delta_used = 0.0;
  std::vector<std::size_t> band;
  std::vector<int> cluster_labels;
  Matrix corner_rows;  // normalized rows Y_C, K x m
  int probes = 1;
};

struct ConeDiagnostics {
  Vector beta_condition;  // (Y_P Y_P')^{-1} 1
  double eta = 0.0;
  double lambda_K = 0.0;
  double kappa = 0.0;
  double zeta = 0.0;      // 4 / (eta b^2 sqrt(lambda_K)); +inf when eta <= 0
  double b = 0.0;         // (1'(Y_P Y_P')^{-1} 1)^{-1/2}
  Vector r;               // per-row scale factors, >= 1 inside the cone
  Matrix phi;             // per-row barycentric weights
};

struct ConeOptions {
  std::uint64_t seed = 0;
  KMeansOptions kmeans;
  DualOptions dual;
  double band_tol = 1e-12;
};

struct DeltaSchedule {
  int first_exponent = -20;  // delta_j = b * 2^(first_exponent + j), after a delta = 0 probe
  int steps = 21;
};

/**
 * @brief Least-squares weights of each row of Z on the corner rows:
 *        M = Z Y_C' (Y_C Y_C')^{-1}.
 */
inline Matrix regress_weights(const Matrix& Z, const Matrix& Yc) {
  if (Z.cols() != Yc.cols()) throw Error(ErrorKind::dimension, "regress_weights column mismatch");
  const Matrix gram = Yc * Yc.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    throw Error(ErrorKind::rank, "corner gram condition number " +
                                     std::to_string(lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity()) +
                                     " exceeds 1e12");
  }
  return gram.ldlt().solve(Yc * Z.transpose()).transpose();
}

/// y_i' = r_i phi_i' Y_P with r_i = (m_i'1)/||m_i'Y_P|| and phi_i = m_i/(m_i'1).
inline std::pair<Vector, Matrix> decompose_rows(const Matrix& Z, const Matrix& Yp) {
  const Matrix M = regress_weights(Z, Yp);
  const Vector sums = M.rowwise().sum();
  std::vector<std::size_t> bad;
  for (Index i = 0; i < M.rows(); ++i) {
    if (!(sums(i) > 0.0)) bad.push_back(static_cast<std::size_t>(i));
  }
  if (!bad.empty()) {
    throw Error(ErrorKind::out_of_cone, "rows with non-positive conic weight sum: " + detail::join_indices(bad), bad);
  }
  const Vector lengths = (M * Yp).rowwise().norm();
  Vector r = sums.cwiseQuotient(lengths);
  Matrix phi = sums.cwiseInverse().asDiagonal() * M;
  return {r, phi};
}

/// Cone-condition diagnostics on unit corner rows, plus r/phi of Z when given.
inline ConeDiagnostics check_condition(const Matrix& Yp, const std::optional<Matrix>& Z = std::nullopt) {
  const Index k = Yp.rows();
  const Matrix gram = Yp * Yp.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 1e-14 * std::max(lmax, 1e-300))) throw Error(ErrorKind::rank, "corner gram matrix is singular");
  ConeDiagnostics d;
  d.beta_condition = gram.ldlt().solve(Vector::Ones(k));
  d.eta = d.beta_condition.minCoeff();
  d.lambda_K = lmin;
  d.kappa = lmax / lmin;
  const double s = d.beta_condition.sum();
  d.b = s > 0.0 ? 1.0 / std::sqrt(s) : std::numeric_limits<double>::quiet_NaN();
  d.zeta = d.eta > 0.0 ? 4.0 / (d.eta * d.b * d.b * std::sqrt(d.lambda_K))
                       : std::numeric_limits<double>::infinity();
  if (Z) {
    auto [r, phi] = decompose_rows(*Z, Yp);
    d.r = std::move(r);
    d.phi = std::move(phi);
  }
  return d;
}

namespace detail {

struct BandResult {
  std::vector<std::size_t> band;
  BandClustering clustering;
};

inline std::vector<std::size_t> band_members(const Matrix& Y, const Hyperplane& h, double delta, double tol) {
  return support_set(h, Y, delta, tol);
}

inline ConeSolution finish_cone(const Matrix& Z, const Matrix& Y, const Hyperplane& h, double delta,
                                std::vector<std::size_t> band, const BandClustering& cl, Index k) {
  // Canonical order: corners ascending, labels follow.
  std::vector<std::size_t> reps(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) reps[static_cast<std::size_t>(c)] = band[cl.representatives[static_cast<std::size_t>(c)]];
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return reps[static_cast<std::size_t>(a)] < reps[static_cast<std::size_t>(b)]; });
  std::vector<int> relabel(static_cast<std::size_t>(k));
  for (Index c = 0; c < k; ++c) relabel[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])] = static_cast<int>(c);

  ConeSolution sol;
  sol.hyperplane = h;
  sol.delta_used = delta;
  sol.band = std::move(band);
  sol.cluster_labels.resize(cl.labels.size());
  for (std::size_t i = 0; i < cl.labels.size(); ++i) sol.cluster_labels[i] = relabel[static_cast<std::size_t>(cl.labels[i])];
  sol.corners.resize(static_cast<std::size_t>(k));
  sol.corner_rows.resize(k, Y.cols());
  for (Index c = 0; c < k; ++c) {
    sol.corners[static_cast<std::size_t>(c)] = reps[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
    sol.corner_rows.row(c) = Y.row(static_cast<Index>(sol.corners[static_cast<std::size_t>(c)]));
  }
  sol.M = regress_weights(Z, sol.corner_rows);
  return sol;
}

inline Matrix gather_rows(const Matrix& Y, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Index>(idx.size()), Y.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = Y.row(static_cast<Index>(idx[i]));
  return out;
}

inline void check_cone_input(const Matrix& Z, Index k) {
  if (k < 1) throw Error(ErrorKind::dimension, "K must be at least 1");
  if (Z.rows() < k) throw Error(ErrorKind::dimension, "fewer rows than K");
  if (!Z.allFinite()) throw Error(ErrorKind::data, "cone input has non-finite entries");
}

}  // namespace detail

/**
 * @brief SVM-cone with a fixed band width delta.
 *
 * Normalizes rows, solves the one-class SVM, clusters the rows with
 * w'y_i <= b + delta into K groups, takes each group's medoid as a
 * corner and regresses Z on the corner rows. No clipping of M.
 */
inline ConeSolution svm_cone(const Matrix& Z, Index k, double delta, const ConeOptions& opt = {}) {
  detail::check_cone_input(Z, k);
  const NormalizedRows nr = row_normalize(Z);
  const Hyperplane h = solve_dual(nr.Y, opt.dual);
  auto band = detail::band_members(nr.Y, h, delta, opt.band_tol);
  if (static_cast<Index>(band.size()) < k) {
    throw Error(ErrorKind::insufficient_band, "band at delta=" + std::to_string(delta) + " holds " +
                                                  std::to_string(band.size()) + " points, need K=" + std::to_string(k));
  }
  const Matrix Yb = detail::gather_rows(nr.Y, band);
  const BandClustering cl = cluster_band(Yb, k, opt.seed, opt.kmeans);
  return detail::finish_cone(Z, nr.Y, h, delta, std::move(band), cl, k);
}

/**
 * @brief SVM-cone with the band width grown until K separated clusters appear.
 *
 * Probes delta = 0, then b * 2^(first_exponent + j). A probe succeeds
 * when the band has at least K points, k-means leaves no cluster empty,
 * the clusters are well separated and the corner gram is well conditioned.
 */
inline ConeSolution auto_delta(const Matrix& Z, Index k, const DeltaSchedule& schedule = {},
                               const ConeOptions& opt = {}) {
  detail::check_cone_input(Z, k);
  const NormalizedRows nr = row_normalize(Z);
  const Hyperplane h = solve_dual(nr.Y, opt.dual);
  std::vector<double> deltas{0.0};
  for (int j = 0; j < schedule.steps; ++j) deltas.push_back(h.b * std::ldexp(1.0, schedule.first_exponent + j));

  std::size_t last_band = 0;
  int probe = 0;
  for (double delta : deltas) {
    ++probe;
    auto band = detail::band_members(nr.Y, h, delta, opt.band_tol);
    last_band = band.size();
    if (static_cast<Index>(band.size()) < k) continue;
    const Matrix Yb = detail::gather_rows(nr.Y, band);
    try {
      const BandClustering cl = cluster_band(Yb, k, opt.seed, opt.kmeans);
      if (!well_separated(Yb, cl)) continue;
      ConeSolution sol = detail::finish_cone(Z, nr.Y, h, delta, std::move(band), cl, k);
      sol.probes = probe;
      return sol;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::cluster_degeneracy && e.kind() != ErrorKind::rank) throw;
    }
  }
  throw Error(ErrorKind::no_cone_structure,
              "no delta up to b=" + std::to_string(h.b) + " produced " + std::to_string(k) +
                  " separated clusters (last band size " + std::to_string(last_band) + ")");
}

}  // namespace conekit
