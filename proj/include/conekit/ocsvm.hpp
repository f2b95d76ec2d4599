#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conekit/errors.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

/**
 * @brief Supporting hyperplane {x : w'x = b} of a set of unit rows.
 *
 * `beta` are the dual weights over the input rows (on the simplex);
 * w = Y'beta / ||Y'beta|| and b = ||Y'beta||.
 */
struct Hyperplane {
  Vector w;
  double b = 0.0;
  Vector beta;
  double duality_gap = 0.0;
  int iterations = 0;
};

struct DualOptions {
  double tol = 1e-12;      // relative duality gap
  long max_iterations = 0; // 0 = 100 * n
};

namespace detail {

/// Minimizes ||Y_S' a|| subject to sum(a) = 1 (affine hull, no sign constraint).
inline Vector affine_min_norm(const Matrix& Ys) {
  const Index s = Ys.rows();
  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  kkt.topLeftCorner(s, s) = Ys * Ys.transpose();
  kkt.topRightCorner(s, 1).setOnes();
  kkt.bottomLeftCorner(1, s).setOnes();
  Vector rhs = Vector::Zero(s + 1);
  rhs(s) = 1.0;
  const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Vector a = sol.head(s);
  return a / a.sum();
}

}  // namespace detail

/**
 * @brief Minimum-norm point of the convex hull of the rows of Y.
 *
 * This is the dual of the hard-margin one-class SVM
 *   max b  s.t.  w'y_i >= b, ||w|| <= 1.
 * Solved with Wolfe's method: a Frank-Wolfe coordinate pick (lowest
 * index on ties) adds a vertex, then affine minor cycles project onto
 * the active face, dropping vertices whose weight would turn negative.
 * Stops when ||x||^2 - min_i y_i'x <= tol * ||x||^2.
 */
inline Hyperplane solve_dual(const Matrix& Y, const DualOptions& opt = {}) {
  const Index n = Y.rows();
  if (n < 1 || Y.cols() < 1) throw Error(ErrorKind::dimension, "solve_dual needs a non-empty input");
  if (!Y.allFinite()) throw Error(ErrorKind::data, "solve_dual input has non-finite entries");
  const long max_iter = opt.max_iterations > 0 ? opt.max_iterations : std::max<long>(100L * n, 100L);

  auto argmin_lowest = [](const Vector& g) {
    Index best = 0;
    for (Index i = 1; i < g.size(); ++i) {
      if (g(i) < g(best)) best = i;
    }
    return best;
  };

  // Frank-Wolfe step from the uniform weights picks the first vertex.
  const Vector centroid = Y.colwise().mean().transpose();
  std::vector<Index> active{argmin_lowest(Y * centroid)};
  std::vector<double> lambda{1.0};
  Vector x = Y.row(active[0]).transpose();

  Hyperplane h;
  double gap = std::numeric_limits<double>::infinity();
  long iter = 0;
  for (; iter < max_iter; ++iter) {
    const Vector g = Y * x;
    const Index j = argmin_lowest(g);
    const double xx = x.squaredNorm();
    gap = xx - g(j);
    if (gap <= opt.tol * std::max(xx, 1e-300)) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;  // numerical floor
    active.push_back(j);
    lambda.push_back(0.0);

    bool progressed = false;
    for (int minor = 0; minor < static_cast<int>(Y.cols()) + 2 + static_cast<int>(active.size()); ++minor) {
      Matrix Ys(static_cast<Index>(active.size()), Y.cols());
      for (std::size_t s = 0; s < active.size(); ++s) Ys.row(static_cast<Index>(s)) = Y.row(active[s]);
      const Vector alpha = detail::affine_min_norm(Ys);
      if ((alpha.array() > 1e-15).all()) {
        for (std::size_t s = 0; s < active.size(); ++s) lambda[s] = alpha(static_cast<Index>(s));
        progressed = true;
        break;
      }
      // Move from lambda toward alpha until the first weight hits zero.
      double theta = 1.0;
      for (std::size_t s = 0; s < active.size(); ++s) {
        const double a = alpha(static_cast<Index>(s));
        if (a <= 1e-15 && lambda[s] - a > 0.0) theta = std::min(theta, lambda[s] / (lambda[s] - a));
      }
      for (std::size_t s = 0; s < active.size(); ++s) {
        lambda[s] = (1.0 - theta) * lambda[s] + theta * alpha(static_cast<Index>(s));
      }
      std::vector<Index> next_active;
      std::vector<double> next_lambda;
      for (std::size_t s = 0; s < active.size(); ++s) {
        if (lambda[s] > 1e-15) {
          next_active.push_back(active[s]);
          next_lambda.push_back(lambda[s]);
        }
      }
      if (next_active.empty()) {  // cannot happen in exact arithmetic
        next_active.push_back(j);
        next_lambda.push_back(1.0);
      }
      const bool dropped_new = std::find(next_active.begin(), next_active.end(), j) == next_active.end();
      active.swap(next_active);
      lambda.swap(next_lambda);
      double total = 0.0;
      for (double l : lambda) total += l;
      for (double& l : lambda) l /= total;
      if (dropped_new) break;
      progressed = true;
    }
    Vector nx = Vector::Zero(Y.cols());
    for (std::size_t s = 0; s < active.size(); ++s) nx += lambda[s] * Y.row(active[s]).transpose();
    if (!progressed || nx.squaredNorm() >= xx) {
      x = nx;
      const Vector g2 = Y * x;
      gap = x.squaredNorm() - g2.minCoeff();
      ++iter;
      break;
    }
    x = nx;
  }
  if (iter >= max_iter && gap > opt.tol * std::max(x.squaredNorm(), 1e-300)) {
    throw Error(ErrorKind::convergence,
                "one-class SVM dual did not converge (gap " + std::to_string(gap) + ")", {}, gap);
  }

  h.beta = Vector::Zero(n);
  for (std::size_t s = 0; s < active.size(); ++s) h.beta(active[s]) = lambda[s];
  const Vector u = Y.transpose() * h.beta;
  h.b = u.norm();
  if (!(h.b > 1e-14)) {
    throw Error(ErrorKind::no_cone_structure,
                "origin lies in the convex hull of the rows; no separating hyperplane");
  }
  h.w = u / h.b;
  h.duality_gap = std::max(gap, 0.0);
  h.iterations = static_cast<int>(iter);
  return h;
}

/**
 * @brief Population hyperplane for K corner rows:
 *   b = (1'(Y_P Y_P')^{-1} 1)^{-1/2},
 *   beta = (Y_P Y_P')^{-1} 1 / (1'(Y_P Y_P')^{-1} 1),
 *   w = Y_P' beta / b.
 */
inline Hyperplane closed_form_hyperplane(const Matrix& Yp) {
  const Index k = Yp.rows();
  if (k < 1) throw Error(ErrorKind::dimension, "closed_form_hyperplane needs at least one corner");
  const Matrix gram = Yp * Yp.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 1e-14 * std::max(lmax, 1e-300))) {
    throw Error(ErrorKind::rank, "corner gram matrix is singular");
  }
  const Vector g = gram.ldlt().solve(Vector::Ones(k));
  std::vector<std::size_t> bad;
  for (Index i = 0; i < k; ++i) {
    if (!(g(i) > 0.0)) bad.push_back(static_cast<std::size_t>(i));
  }
  if (!bad.empty()) {
    throw Error(ErrorKind::cone_condition,
                "(Y_P Y_P')^{-1} 1 is non-positive at coordinates " + detail::join_indices(bad), bad);
  }
  const double s = g.sum();
  Hyperplane h;
  h.b = 1.0 / std::sqrt(s);
  h.beta = g / s;
  h.w = Yp.transpose() * h.beta / h.b;
  return h;
}

/// Indices i with w'y_i <= b + slack + margin_tol (closed band).
inline std::vector<std::size_t> support_set(const Hyperplane& h, const Matrix& Y, double slack,
                                            double margin_tol = 1e-8) {
  const Vector proj = Y * h.w;
  const double limit = h.b + slack + margin_tol;
  std::vector<std::size_t> out;
  for (Index i = 0; i < Y.rows(); ++i) {
    if (proj(i) <= limit) out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

}  // namespace conekit
