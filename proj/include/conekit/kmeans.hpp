#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "conekit/errors.hpp"
#include "conekit/random.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

struct KMeansOptions {
  int restarts = 100;
  int max_iterations = 300;
};

struct BandClustering {
  std::vector<int> labels;                  // one per input row, in [0, K)
  std::vector<std::size_t> representatives; // row index of each cluster's medoid
  Matrix centroids;                         // K x m
  double inertia = 0.0;
};

namespace detail {

inline bool kmeans_once(const Matrix& X, Index k, rng::Engine& gen, int max_iterations,
                        std::vector<int>& labels, Matrix& centers, double& inertia) {
  const Index s = X.rows();
  centers.resize(k, X.cols());

  // k-means++ seeding.
  Index first = static_cast<Index>(gen() % static_cast<std::uint64_t>(s));
  centers.row(0) = X.row(first);
  Vector d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double target = rng::uniform01(gen) * total;
      double acc = 0.0;
      pick = s - 1;
      for (Index i = 0; i < s; ++i) {
        acc += d2(i);
        if (acc >= target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = X.row(pick);
    d2 = d2.cwiseMin((X.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  labels.assign(static_cast<std::size_t>(s), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (Index i = 0; i < s; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Matrix sums = Matrix::Zero(k, X.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < s; ++i) {
      const auto l = labels[static_cast<std::size_t>(i)];
      sums.row(l) += X.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    if (!changed) break;
  }

  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  inertia = 0.0;
  for (Index i = 0; i < s; ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    ++counts[static_cast<std::size_t>(l)];
    inertia += (X.row(i) - centers.row(l)).squaredNorm();
  }
  for (auto c : counts) {
    if (c == 0) return false;
  }
  return true;
}

}  // namespace detail

/**
 * @brief Clusters the near-hyperplane rows into K groups and picks one
 *        representative (medoid, lowest index on ties) per group.
 *
 * k-means++ seeding keyed on `seed`, best inertia over the restarts.
 */
inline BandClustering cluster_band(const Matrix& Yb, Index k, std::uint64_t seed,
                                   const KMeansOptions& opt = {}) {
  const Index s = Yb.rows();
  if (k < 1 || s < k) {
    throw Error(ErrorKind::insufficient_band,
                "band has " + std::to_string(s) + " points, need at least K=" + std::to_string(k));
  }
  BandClustering best;
  bool found = false;
  std::vector<int> labels;
  Matrix centers;
  for (int r = 0; r < opt.restarts; ++r) {
    auto gen = rng::keyed(seed, rng::Stream::kmeans, static_cast<std::uint64_t>(r));
    double inertia = 0.0;
    if (!detail::kmeans_once(Yb, k, gen, opt.max_iterations, labels, centers, inertia)) continue;
    if (!found || inertia < best.inertia) {
      best.labels = labels;
      best.centroids = centers;
      best.inertia = inertia;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorKind::cluster_degeneracy,
                "k-means left an empty cluster in every restart (" + std::to_string(s) +
                    " band points, K=" + std::to_string(k) + ")");
  }

  best.representatives.assign(static_cast<std::size_t>(k), 0);
  for (Index c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < s; ++i) {
      if (best.labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
    }
    double best_cost = std::numeric_limits<double>::infinity();
    for (Index a : members) {
      double cost = 0.0;
      for (Index b : members) cost += (Yb.row(a) - Yb.row(b)).norm();
      if (cost < best_cost) {
        best_cost = cost;
        best.representatives[static_cast<std::size_t>(c)] = static_cast<std::size_t>(a);
      }
    }
  }
  return best;
}

/// Minimum distance between centroids strictly exceeds the largest member-to-centroid distance.
inline bool well_separated(const Matrix& Yb, const BandClustering& cl) {
  double radius = 0.0;
  for (Index i = 0; i < Yb.rows(); ++i) {
    radius = std::max(radius, (Yb.row(i) - cl.centroids.row(cl.labels[static_cast<std::size_t>(i)])).norm());
  }
  double gap = std::numeric_limits<double>::infinity();
  for (Index a = 0; a < cl.centroids.rows(); ++a) {
    for (Index b = a + 1; b < cl.centroids.rows(); ++b) {
      gap = std::min(gap, (cl.centroids.row(a) - cl.centroids.row(b)).norm());
    }
  }
  return gap > radius;
}

}  // namespace conekit
