#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conekit/errors.hpp"
#include "conekit/models.hpp"
#include "conekit/random.hpp"
#include "conekit/spectral.hpp"

namespace conekit {

enum class NetworkModel { dcmmsb, occam, sbmo };

inline const char* to_string(NetworkModel m) {
  switch (m) {
    case NetworkModel::dcmmsb: return "dcmmsb";
    case NetworkModel::occam: return "occam";
    case NetworkModel::sbmo: return "sbmo";
  }
  return "?";
}

/// Degree-parameter rule. `values`: node dominant in community j (theta_ij > 0.5)
/// gets values[j], every other node 1. `beta`: Beta(a, b) draws. `constant`: all 1.
struct GammaSpec {
  enum class Kind { values, beta, constant };
  Kind kind = Kind::values;
  std::vector<double> values{0.3, 0.5, 0.7};
  double a = 1.0;
  double b = 3.0;
};

struct NetworkConfig {
  NetworkModel model = NetworkModel::dcmmsb;
  std::size_t n = 5000;
  Index K = 3;
  std::vector<double> alpha;  // empty: 1/K (dcmmsb), 1/(2K) (occam)
  Matrix B;                   // empty: b_diag on the diagonal, b_offdiag elsewhere
  double b_diag = 1.0;
  double b_offdiag = 0.1;
  std::optional<double> rho;          // applied to the raw degree values
  std::optional<double> mean_degree;  // overrides rho: expected mean degree
  GammaSpec gamma;
  double overlap_fraction = 0.2;  // sbmo only
  bool plant_pure = true;         // first K nodes are pure
  std::uint64_t seed = 0;

  Matrix block_matrix() const {
    if (B.size() > 0) return B;
    Matrix b = Matrix::Constant(K, K, b_offdiag);
    b.diagonal().setConstant(b_diag);
    return b;
  }

  Vector dirichlet_alpha() const {
    if (!alpha.empty()) {
      if (alpha.size() == 1) return Vector::Constant(K, alpha[0]);
      return Eigen::Map<const Vector>(alpha.data(), static_cast<Index>(alpha.size()));
    }
    const double a = model == NetworkModel::occam ? 1.0 / (2.0 * static_cast<double>(K)) : 1.0 / static_cast<double>(K);
    return Vector::Constant(K, a);
  }
};

/**
 * @brief Population matrix P = rho G B G' with G = Gamma Theta, evaluated lazily.
 */
class NetworkPopulation {
 public:
  NetworkPopulation() = default;
  NetworkPopulation(Matrix G, Matrix B, double rho) : G_(std::move(G)), B_(std::move(B)), rho_(rho) {
    GB_ = G_ * B_;
  }

  std::size_t n() const { return static_cast<std::size_t>(G_.rows()); }
  double entry(Index i, Index j) const { return rho_ * GB_.row(i).dot(G_.row(j)); }

  /// Full low-rank P, diagonal included.
  Matrix dense() const { return rho_ * GB_ * G_.transpose(); }

  /// sum_{i<j} P_ij.
  double expected_edges() const {
    const Vector colsum = G_.colwise().sum().transpose();
    double total = colsum.dot(B_ * colsum);
    for (Index i = 0; i < G_.rows(); ++i) total -= GB_.row(i).dot(G_.row(i));
    return 0.5 * rho_ * total;
  }

  /// sum_{i<j} P_ij (1 - P_ij), the variance of the edge count.
  double edge_variance() const {
    double v = 0.0;
    for (Index i = 0; i < G_.rows(); ++i) {
      for (Index j = i + 1; j < G_.rows(); ++j) {
        const double p = entry(i, j);
        v += p * (1.0 - p);
      }
    }
    return v;
  }

 private:
  Matrix G_;
  Matrix B_;
  Matrix GB_;
  double rho_ = 0.0;
};

struct SimulatedNetwork {
  SparseSymAdjacency A;
  NetworkParams truth;
  NetworkPopulation population;
};

namespace detail {

inline void validate(const NetworkConfig& cfg) {
  if (cfg.K < 1) throw Error(ErrorKind::input, "k must be positive");
  if (cfg.n < static_cast<std::size_t>(cfg.K)) throw Error(ErrorKind::input, "n must be at least k");
  const Vector a = cfg.dirichlet_alpha();
  if (a.size() != cfg.K) throw Error(ErrorKind::input, "alpha must have 1 or k entries");
  if (!(a.array() > 0.0).all()) throw Error(ErrorKind::input, "alpha entries must be positive");
  const Matrix B = cfg.block_matrix();
  if (B.rows() != cfg.K || B.cols() != cfg.K) throw Error(ErrorKind::input, "B must be k x k");
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 0.0) throw Error(ErrorKind::input, "B must be symmetric");
  if ((B.array() < 0.0).any()) throw Error(ErrorKind::input, "B must be non-negative");
  if (cfg.rho && !(*cfg.rho >= 0.0)) throw Error(ErrorKind::input, "rho must be non-negative");
  if (cfg.mean_degree && !(*cfg.mean_degree >= 0.0)) throw Error(ErrorKind::input, "mean_degree must be non-negative");
  if (cfg.model == NetworkModel::sbmo && !(cfg.overlap_fraction >= 0.0 && cfg.overlap_fraction <= 1.0)) {
    throw Error(ErrorKind::input, "overlap_fraction must lie in [0, 1]");
  }
  if (cfg.gamma.kind == GammaSpec::Kind::values && static_cast<Index>(cfg.gamma.values.size()) < cfg.K &&
      cfg.model == NetworkModel::dcmmsb) {
    throw Error(ErrorKind::input, "gamma values rule needs one value per community");
  }
  if (cfg.gamma.kind == GammaSpec::Kind::beta && !(cfg.gamma.a > 0.0 && cfg.gamma.b > 0.0)) {
    throw Error(ErrorKind::input, "beta degree parameters must be positive");
  }
}

/// Picks rho so that sum_{i != j} P_ij = mean_degree * n, or rescales a user rho.
inline double resolve_rho(const NetworkConfig& cfg, const Matrix& G, const Matrix& B, double raw_scale) {
  if (cfg.mean_degree) {
    const NetworkPopulation unit(G, B, 1.0);
    const double pairs = 2.0 * unit.expected_edges();
    if (pairs <= 0.0) return 0.0;
    return *cfg.mean_degree * static_cast<double>(G.rows()) / pairs;
  }
  const double rho = cfg.rho.value_or(1.0);
  return rho * raw_scale * raw_scale;
}

inline SparseSymAdjacency sample_edges(const NetworkPopulation& pop, std::uint64_t seed) {
  const Index n = static_cast<Index>(pop.n());
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    auto gen = rng::keyed(seed, rng::Stream::edges, static_cast<std::uint64_t>(i));
    for (Index j = i + 1; j < n; ++j) {
      const double p = pop.entry(i, j);
      if (p > 1.0 + 1e-12) {
        throw Error(ErrorKind::scale, "P(" + std::to_string(i) + "," + std::to_string(j) + ") = rho*gamma_i*gamma_j*theta_i'B theta_j = " +
                                          std::to_string(p) + " exceeds 1",
                    {static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
      }
      if (rng::uniform01(gen) < p) edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), 1.0});
    }
  }
  return SparseSymAdjacency(static_cast<std::size_t>(n), std::move(edges));
}

inline SimulatedNetwork finish_network(const NetworkConfig& cfg, Matrix Theta, Vector raw_gamma, int p,
                                       std::optional<Eigen::MatrixXi> Z = std::nullopt) {
  const double n = static_cast<double>(cfg.n);
  const double scale = raw_gamma.sum() / n;
  if (!(scale > 0.0)) throw Error(ErrorKind::input, "degree parameters sum to zero");
  Vector Gamma = raw_gamma / scale;
  const Matrix B = cfg.block_matrix();
  Matrix G = Gamma.asDiagonal() * Theta;
  const double rho = resolve_rho(cfg, G, B, scale);

  SimulatedNetwork sim;
  sim.population = NetworkPopulation(G, B, rho);
  sim.A = sample_edges(sim.population, cfg.seed);
  sim.truth.Theta = std::move(Theta);
  sim.truth.Gamma = std::move(Gamma);
  sim.truth.B = B;
  sim.truth.rho = rho;
  sim.truth.p = p;
  sim.truth.Z_binary = std::move(Z);
  return sim;
}

inline Matrix draw_memberships(const NetworkConfig& cfg) {
  const Vector alpha = cfg.dirichlet_alpha();
  Matrix Theta(static_cast<Index>(cfg.n), cfg.K);
  for (Index i = 0; i < Theta.rows(); ++i) {
    if (cfg.plant_pure && i < cfg.K) {
      Theta.row(i).setZero();
      Theta(i, i) = 1.0;
      continue;
    }
    auto gen = rng::keyed(cfg.seed, rng::Stream::membership, static_cast<std::uint64_t>(i));
    Theta.row(i) = rng::dirichlet(alpha, gen).transpose();
  }
  return Theta;
}

inline Vector draw_degrees(const NetworkConfig& cfg, const Matrix& Theta) {
  Vector g(Theta.rows());
  for (Index i = 0; i < Theta.rows(); ++i) {
    switch (cfg.gamma.kind) {
      case GammaSpec::Kind::constant:
        g(i) = 1.0;
        break;
      case GammaSpec::Kind::beta: {
        auto gen = rng::keyed(cfg.seed, rng::Stream::degree, static_cast<std::uint64_t>(i));
        g(i) = rng::beta(cfg.gamma.a, cfg.gamma.b, gen);
        break;
      }
      case GammaSpec::Kind::values: {
        g(i) = 1.0;
        for (Index j = 0; j < Theta.cols(); ++j) {
          if (Theta(i, j) > 0.5 && j < static_cast<Index>(cfg.gamma.values.size())) {
            g(i) = cfg.gamma.values[static_cast<std::size_t>(j)];
          }
        }
        break;
      }
    }
  }
  return g;
}

}  // namespace detail

/// DCMMSB: Dirichlet memberships (l1 rows), degree rule, P = rho Gamma Theta B Theta' Gamma.
inline SimulatedNetwork gen_dcmmsb(NetworkConfig cfg) {
  cfg.model = NetworkModel::dcmmsb;
  detail::validate(cfg);
  Matrix Theta = detail::draw_memberships(cfg);
  Vector raw = detail::draw_degrees(cfg, Theta);
  return detail::finish_network(cfg, std::move(Theta), std::move(raw), 1);
}

/// OCCAM: Dirichlet draws re-normalized to unit l2 rows, Beta(a, b) degrees by default.
inline SimulatedNetwork gen_occam(NetworkConfig cfg) {
  cfg.model = NetworkModel::occam;
  detail::validate(cfg);
  Matrix Theta = detail::draw_memberships(cfg);
  for (Index i = 0; i < Theta.rows(); ++i) Theta.row(i).normalize();
  Vector raw = detail::draw_degrees(cfg, Theta);
  return detail::finish_network(cfg, std::move(Theta), std::move(raw), 2);
}

/// OCCAM defaults: Beta(1, 3) degree parameters.
inline NetworkConfig occam_defaults(NetworkConfig cfg) {
  cfg.model = NetworkModel::occam;
  cfg.gamma.kind = GammaSpec::Kind::beta;
  cfg.gamma.a = 1.0;
  cfg.gamma.b = 3.0;
  return cfg;
}

/**
 * @brief Overlapping SBM: one community per node, a second distinct one
 *        with probability overlap_fraction, P = rho Z B Z'.
 *
 * Truth is reported in DCMMSB form: gamma'_i = ||z_i||_1, theta_i = z_i / gamma'_i,
 * Gamma = gamma' n / sum(gamma'), rho' = rho (sum(gamma') / n)^2.
 */
inline SimulatedNetwork gen_sbmo(NetworkConfig cfg, std::optional<double> overlap_fraction = std::nullopt) {
  cfg.model = NetworkModel::sbmo;
  if (overlap_fraction) cfg.overlap_fraction = *overlap_fraction;
  detail::validate(cfg);
  const Index n = static_cast<Index>(cfg.n);
  const Index k = cfg.K;
  Eigen::MatrixXi Z = Eigen::MatrixXi::Zero(n, k);
  for (Index i = 0; i < n; ++i) {
    if (cfg.plant_pure && i < k) {
      Z(i, i) = 1;
      continue;
    }
    auto gen = rng::keyed(cfg.seed, rng::Stream::membership, static_cast<std::uint64_t>(i));
    const Index first = static_cast<Index>(gen() % static_cast<std::uint64_t>(k));
    Z(i, first) = 1;
    auto ov = rng::keyed(cfg.seed, rng::Stream::overlap, static_cast<std::uint64_t>(i));
    if (k > 1 && rng::uniform01(ov) < cfg.overlap_fraction) {
      Index second = static_cast<Index>(ov() % static_cast<std::uint64_t>(k - 1));
      if (second >= first) ++second;
      Z(i, second) = 1;
    }
  }
  const Vector raw = Z.cast<double>().rowwise().sum();
  Matrix Theta = raw.cwiseInverse().asDiagonal() * Z.cast<double>();
  return detail::finish_network(cfg, std::move(Theta), raw, 1, std::move(Z));
}

inline SimulatedNetwork simulate_network(const NetworkConfig& cfg) {
  switch (cfg.model) {
    case NetworkModel::dcmmsb: return gen_dcmmsb(cfg);
    case NetworkModel::occam: return gen_occam(cfg);
    case NetworkModel::sbmo: return gen_sbmo(cfg);
  }
  throw Error(ErrorKind::input, "unknown network model");
}

struct TopicConfig {
  std::size_t V = 500;
  std::size_t D = 5000;
  long N = 200;
  Index K = 5;
  int anchors_per_topic = 1;
  double anchor_mass = 0.05;
  double word_concentration = 1.0;
  double doc_concentration = 0.01;
  std::uint64_t seed = 0;
};

struct SimulatedCorpus {
  SparseCounts A;
  TopicParams truth;
};

/// Planted-anchor word-topic matrix: topic k owns words [k a, (k + 1) a) with anchor_mass each.
inline Matrix planted_topic_matrix(const TopicConfig& cfg) {
  const Index V = static_cast<Index>(cfg.V);
  const Index k = cfg.K;
  const Index anchors = static_cast<Index>(cfg.anchors_per_topic) * k;
  const double rest = 1.0 - cfg.anchors_per_topic * cfg.anchor_mass;
  Matrix T = Matrix::Zero(V, k);
  const Vector alpha = Vector::Constant(V - anchors, cfg.word_concentration);
  for (Index t = 0; t < k; ++t) {
    for (int a = 0; a < cfg.anchors_per_topic; ++a) T(t * cfg.anchors_per_topic + a, t) = cfg.anchor_mass;
    auto gen = rng::keyed(cfg.seed, rng::Stream::topic_words, static_cast<std::uint64_t>(t));
    T.col(t).tail(V - anchors) = rest * rng::dirichlet(alpha, gen);
  }
  return T;
}

/**
 * @brief Semi-synthetic corpus: planted-anchor T, H columns ~ Dirichlet(doc_concentration),
 *        document d ~ Multinomial(N, T H(:, d)).
 */
inline SimulatedCorpus gen_topics(const TopicConfig& cfg) {
  const Index k = cfg.K;
  if (k < 1) throw Error(ErrorKind::input, "k must be positive");
  if (cfg.V < 2 * static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::input, "too few words: V=" + std::to_string(cfg.V) + " < 2K=" + std::to_string(2 * k));
  }
  if (cfg.anchors_per_topic < 1 || static_cast<std::size_t>(cfg.anchors_per_topic * k) >= cfg.V) {
    throw Error(ErrorKind::input, "anchors_per_topic must leave at least one non-anchor word");
  }
  if (!(cfg.anchor_mass > 0.0) || !(cfg.anchors_per_topic * cfg.anchor_mass < 1.0)) {
    throw Error(ErrorKind::input, "anchor mass per topic must lie in (0, 1)");
  }
  if (!(cfg.word_concentration > 0.0) || !(cfg.doc_concentration > 0.0)) {
    throw Error(ErrorKind::input, "Dirichlet concentrations must be positive");
  }
  if (cfg.N < 0 || cfg.D < 1) throw Error(ErrorKind::input, "need D >= 1 documents and N >= 0 tokens");

  SimulatedCorpus out;
  out.truth.K = k;
  out.truth.N = cfg.N;
  out.truth.T = planted_topic_matrix(cfg);
  out.truth.H.resize(k, static_cast<Index>(cfg.D));
  const Vector alpha = Vector::Constant(k, cfg.doc_concentration);
  std::vector<CountEntry> entries;
  for (std::size_t d = 0; d < cfg.D; ++d) {
    auto mix = rng::keyed(cfg.seed, rng::Stream::topic_mix, d);
    out.truth.H.col(static_cast<Index>(d)) = rng::dirichlet(alpha, mix);
    const Vector probs = out.truth.T * out.truth.H.col(static_cast<Index>(d));
    auto gen = rng::keyed(cfg.seed, rng::Stream::doc_counts, d);
    const auto counts = rng::multinomial(cfg.N, probs, gen);
    for (std::size_t w = 0; w < counts.size(); ++w) {
      if (counts[w] > 0) entries.push_back({w, d, counts[w]});
    }
  }
  out.A = SparseCounts(cfg.V, cfg.D, std::move(entries));
  return out;
}

/// Expected co-occurrence (T H)(T H)', the population input for fit_topics_population.
inline Matrix topic_population_gram(const TopicParams& truth) {
  const Matrix HHt = truth.H * truth.H.transpose();
  return truth.T * HHt * truth.T.transpose();
}

}  // namespace conekit
