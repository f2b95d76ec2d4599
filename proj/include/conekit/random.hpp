#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace conekit::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream identifiers so different samplers keyed on the same entity never share draws.
enum class Stream : std::uint64_t {
  membership = 1,
  degree = 2,
  edges = 3,
  overlap = 4,
  topic_words = 5,
  topic_mix = 6,
  doc_counts = 7,
  split = 8,
  kmeans = 9,
  lanczos = 10,
};

/**
 * @brief Generator keyed by (seed, stream, entity index).
 *
 * Draws for one entity never depend on how many other entities were
 * sampled before it, so per-node and per-document sampling is
 * order-independent and reproducible under any thread schedule.
 */
inline Engine keyed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ index);
  return Engine(h);
}

inline double uniform01(Engine& g) {
  // 53-bit mantissa, strictly inside (0, 1).
  return (static_cast<double>(g() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

/// log of a Gamma(shape, 1) draw; stable for tiny shapes where the draw underflows.
inline double log_gamma_draw(double shape, Engine& g) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> dist(shape, 1.0);
    double x = dist(g);
    while (x <= 0.0) x = dist(g);
    return std::log(x);
  }
  std::gamma_distribution<double> dist(shape + 1.0, 1.0);
  double x = dist(g);
  while (x <= 0.0) x = dist(g);
  return std::log(x) + std::log(uniform01(g)) / shape;
}

inline Eigen::VectorXd dirichlet(const Eigen::VectorXd& alpha, Engine& g) {
  const auto k = alpha.size();
  Eigen::VectorXd logs(k);
  for (Eigen::Index i = 0; i < k; ++i) logs(i) = log_gamma_draw(alpha(i), g);
  const double mx = logs.maxCoeff();
  Eigen::VectorXd out = (logs.array() - mx).exp();
  return out / out.sum();
}

inline double beta(double a, double b, Engine& g) {
  const double la = log_gamma_draw(a, g);
  const double lb = log_gamma_draw(b, g);
  const double m = std::max(la, lb);
  const double ea = std::exp(la - m);
  const double eb = std::exp(lb - m);
  return ea / (ea + eb);
}

/// Conditional-binomial multinomial draw; the counts always sum to trials.
inline std::vector<long> multinomial(long trials, const Eigen::VectorXd& probs, Engine& g) {
  std::vector<long> counts(static_cast<std::size_t>(probs.size()), 0);
  Eigen::Index last = probs.size() - 1;
  while (last > 0 && probs(last) <= 0.0) --last;
  long remaining = trials;
  double mass_left = probs.head(last + 1).sum();
  for (Eigen::Index i = 0; i <= last && remaining > 0; ++i) {
    if (i == last) {
      counts[static_cast<std::size_t>(i)] = remaining;
      break;
    }
    const double p = mass_left > 0.0 ? std::clamp(probs(i) / mass_left, 0.0, 1.0) : 0.0;
    long x = 0;
    if (p >= 1.0) {
      x = remaining;
    } else if (p > 0.0) {
      std::binomial_distribution<long> dist(remaining, p);
      x = dist(g);
    }
    counts[static_cast<std::size_t>(i)] = x;
    remaining -= x;
    mass_left -= probs(i);
  }
  return counts;
}

}  // namespace conekit::rng
