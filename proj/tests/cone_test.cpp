#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "conekit/cone.hpp"
#include "conekit/models.hpp"
#include "conekit/simulators.hpp"
#include "test_util.hpp"

using namespace conekit;
using conekit::testing::full_top_eigvecs;
using conekit::testing::permuted_max_abs;
using conekit::testing::random_matrix;
using conekit::testing::random_orthogonal;
using conekit::testing::unit_rows;

namespace {

// Cheap clustering for tests that do not probe k-means itself.
ConeOptions quick() {
  ConeOptions o;
  o.kmeans.restarts = 10;
  return o;
}

void expect_solution_invariants(const ConeSolution& s, const Matrix& Z, Index k) {
  const NormalizedRows nr = row_normalize(Z);
  ASSERT_EQ(s.corners.size(), static_cast<std::size_t>(k));
  EXPECT_TRUE(std::is_sorted(s.corners.begin(), s.corners.end()));
  EXPECT_EQ(s.cluster_labels.size(), s.band.size());
  const Vector margins = nr.Y * s.hyperplane.w;
  for (auto i : s.band) EXPECT_LE(margins(static_cast<Index>(i)), s.hyperplane.b + s.delta_used + 1e-12);
  for (auto c : s.corners) EXPECT_NE(std::find(s.band.begin(), s.band.end(), c), s.band.end());
  EXPECT_EQ(s.M.rows(), Z.rows());
  EXPECT_EQ(s.M.cols(), k);
}

}  // namespace

TEST(SvmCone, IdentityCorners) {
  const Matrix Z = Matrix::Identity(3, 3);
  const auto s = svm_cone(Z, 3, 0.0);
  EXPECT_EQ(s.corners, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_LE((s.M - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  expect_solution_invariants(s, Z, 3);
}

TEST(SvmCone, ScaledAndMixedRows) {
  Matrix Z(4, 2);
  Z << 1, 0, 0, 1, 2, 0, 1, 1;
  const auto s = svm_cone(Z, 2, 0.0);
  ASSERT_EQ(s.corners.size(), 2u);
  const std::set<std::size_t> first{0, 2};
  EXPECT_TRUE(first.count(s.corners[0]) == 1);
  EXPECT_EQ(s.corners[1], 1u);
  Matrix expect(4, 2);
  expect << 1, 0, 0, 1, 2, 0, 1, 1;
  EXPECT_LE(permuted_max_abs(expect, s.M), 1e-12);
}

TEST(SvmCone, PlantedPopulationRecoversConeWeights) {
  NetworkConfig cfg;
  cfg.n = 60;
  cfg.K = 3;
  cfg.seed = 17;
  const auto sim = gen_dcmmsb(cfg);
  const Matrix V = full_top_eigvecs(sim.population.dense(), 3);
  // Pure nodes are the first K rows: V = Gamma Theta Gamma_P^{-1} V_P, V_P = diag(|V_P rows|) Y_P.
  const Matrix Vp = V.topRows(3);
  const Vector gp = sim.truth.Gamma.head(3);
  const Matrix expect = sim.truth.Gamma.asDiagonal() * sim.truth.Theta * gp.cwiseInverse().asDiagonal() *
                        Vp.rowwise().norm().asDiagonal();
  const auto s = svm_cone(V, 3, 0.0);
  EXPECT_EQ(s.corners, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_LE(permuted_max_abs(expect, s.M), 1e-6);
}

TEST(SvmCone, InsufficientBand) {
  Matrix Z(3, 2);
  Z << 1, 0, 0, 1, 1, 1;
  try {
    svm_cone(Z, 3, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_band);
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(SvmCone, OriginInsideHull) {
  Matrix Z(3, 2);
  Z << 1, 0, -1, 0, 0, 1;
  try {
    auto_delta(Z, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_cone_structure);
  }
}

TEST(SvmCone, ZeroRowRejected) {
  Matrix Z(3, 2);
  Z << 1, 0, 0, 0, 0, 1;
  try {
    svm_cone(Z, 2, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_row);
    EXPECT_EQ(e.indices(), (std::vector<std::size_t>{1}));
  }
}

TEST(AutoDelta, CornersOnlyStopsAtZero) {
  const Matrix Z = random_orthogonal(4, 3);
  const auto s = auto_delta(Z, 4);
  EXPECT_EQ(s.delta_used, 0.0);
  EXPECT_EQ(s.probes, 1);
  EXPECT_EQ(s.corners, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(AutoDelta, DuplicatedCornersShareClusters) {
  Matrix Z(6, 3);
  Z << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 2, 0, 0.5, 0.5, 0.5;
  const auto s = auto_delta(Z, 3);
  EXPECT_EQ(s.delta_used, 0.0);
  EXPECT_EQ(s.band.size(), 5u);
  std::vector<int> label_of(6, -1);
  for (std::size_t t = 0; t < s.band.size(); ++t) label_of[s.band[t]] = s.cluster_labels[t];
  EXPECT_EQ(label_of[0], label_of[3]);
  EXPECT_EQ(label_of[1], label_of[4]);
  EXPECT_NE(label_of[0], label_of[1]);
  EXPECT_NE(label_of[0], label_of[2]);
  Matrix expect(6, 3);
  expect << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 0, 2, 0, 0.5, 0.5, 0.5;
  EXPECT_LE(permuted_max_abs(expect, s.M), 1e-12);
}

TEST(AutoDelta, NoisyNetworkTerminates) {
  NetworkConfig cfg;
  cfg.n = 1000;
  cfg.K = 3;
  cfg.mean_degree = 60.0;
  cfg.seed = 4;
  const auto sim = gen_dcmmsb(cfg);
  EigOptions eo;
  eo.order = EigenOrder::algebraic;
  const Spectrum sp = top_k_eigs(sim.A, 3, eo);
  const auto s = auto_delta(sp.vectors, 3);
  EXPECT_TRUE(std::isfinite(s.delta_used));
  std::vector<int> counts(3, 0);
  for (int l : s.cluster_labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) EXPECT_GT(c, 0);
  expect_solution_invariants(s, sp.vectors, 3);
}

TEST(ClusterBand, SingletonGroups) {
  const Matrix Y = Matrix::Identity(3, 3);
  const auto cl = cluster_band(Y, 3, 1);
  std::set<int> labels(cl.labels.begin(), cl.labels.end());
  EXPECT_EQ(labels.size(), 3u);
  for (Index c = 0; c < 3; ++c) {
    const auto rep = cl.representatives[static_cast<std::size_t>(c)];
    EXPECT_EQ(cl.labels[rep], c);
  }
  EXPECT_TRUE(well_separated(Y, cl));
}

TEST(ClusterBand, BlobMedoidsMatchExhaustiveSearch) {
  Matrix Y(10, 2);
  const double off[5][2] = {{0, 0}, {0.03, 0.01}, {-0.02, 0.02}, {0.01, -0.03}, {-0.01, -0.01}};
  for (int i = 0; i < 5; ++i) {
    Y.row(i) << 1 + off[i][0], off[i][1];
    Y.row(5 + i) << off[4 - i][1], 1 + off[4 - i][0];
  }
  const auto cl = cluster_band(Y, 2, 9);
  for (int c = 0; c < 2; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < 10; ++i) {
      if (cl.labels[static_cast<std::size_t>(i)] == c) members.push_back(i);
    }
    ASSERT_EQ(members.size(), 5u);
    Index best = -1;
    double best_cost = INFINITY;
    for (Index a : members) {
      double cost = 0;
      for (Index b : members) cost += (Y.row(a) - Y.row(b)).norm();
      if (cost < best_cost - 1e-15) {
        best_cost = cost;
        best = a;
      }
    }
    EXPECT_EQ(static_cast<Index>(cl.representatives[static_cast<std::size_t>(c)]), best);
  }
}

TEST(ClusterBand, IdenticalPointsCannotFormTwoClusters) {
  const Matrix Y = Matrix::Ones(4, 2) / std::sqrt(2.0);
  try {
    cluster_band(Y, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::cluster_degeneracy);
  }
}

TEST(ClusterBand, Deterministic) {
  const Matrix Y = unit_rows(random_matrix(30, 3, 8, 0.0, 1.0));
  const auto a = cluster_band(Y, 3, 42);
  const auto b = cluster_band(Y, 3, 42);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.representatives, b.representatives);
}

TEST(RegressWeights, SelfRegressionIsIdentity) {
  const Matrix Yc = unit_rows(random_matrix(3, 5, 11));
  EXPECT_LE((regress_weights(Yc, Yc) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RegressWeights, ScaledCorner) {
  const Matrix Yc = unit_rows(random_matrix(3, 5, 12));
  const Matrix z = 2.0 * Yc.row(0);
  const Matrix m = regress_weights(z, Yc);
  EXPECT_NEAR(m(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(m(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(m(0, 2), 0.0, 1e-12);
}

TEST(RegressWeights, RecoversForwardConstruction) {
  const Matrix Yc = unit_rows(random_matrix(3, 6, 13));
  const Matrix M0 = random_matrix(10, 3, 14, 0.0, 1.0);
  EXPECT_LE((regress_weights(M0 * Yc, Yc) - M0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RegressWeights, RankDeficientCorners) {
  Matrix Yc(2, 2);
  Yc << 1, 0, 1, 0;
  try {
    regress_weights(Yc, Yc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::rank);
    EXPECT_EQ(e.exit_code(), 4);
  }
}

TEST(CheckCondition, IdentityCorners) {
  for (Index k : {2, 3, 5}) {
    const auto d = check_condition(Matrix::Identity(k, k));
    EXPECT_LE((d.beta_condition - Vector::Ones(k)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(d.eta, 1.0, 1e-14);
    EXPECT_NEAR(d.lambda_K, 1.0, 1e-14);
    EXPECT_NEAR(d.kappa, 1.0, 1e-14);
    EXPECT_NEAR(d.b * d.b, 1.0 / static_cast<double>(k), 1e-14);
    EXPECT_NEAR(d.zeta, 4.0 * static_cast<double>(k), 1e-12);
  }
}

TEST(CheckCondition, SixtyDegrees) {
  Matrix Y(2, 2);
  Y << 1, 0, 0.5, std::sqrt(3.0) / 2;
  const auto d = check_condition(Y);
  EXPECT_NEAR(d.beta_condition(0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(d.beta_condition(1), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(d.eta, 2.0 / 3.0, 1e-14);
}

TEST(CheckCondition, NearlyAntipodal) {
  const double a = 179.0 * M_PI / 180.0;
  Matrix Y(2, 2);
  Y << 1, 0, std::cos(a), std::sin(a);
  const auto d = check_condition(Y);
  EXPECT_GT(d.eta, 0.0);
  EXPECT_GT(d.kappa, 1e4);
}

TEST(CheckCondition, SingularGram) {
  Matrix Y(2, 2);
  Y << 0, 1, 0, 1;
  EXPECT_THROW(check_condition(Y), Error);
}

TEST(DecomposeRows, CornerRow) {
  const Matrix Yp = unit_rows(random_matrix(3, 4, 21, 0.0, 1.0));
  const auto [r, phi] = decompose_rows(Yp.row(1), Yp);
  EXPECT_NEAR(r(0), 1.0, 1e-12);
  EXPECT_NEAR(phi(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(phi(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(phi(0, 2), 0.0, 1e-12);
}

TEST(DecomposeRows, EqualMixOfOrthonormalCorners) {
  Matrix z(1, 2);
  z << 1, 1;
  const auto [r, phi] = decompose_rows(z, Matrix::Identity(2, 2));
  EXPECT_NEAR(r(0), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(phi(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(phi(0, 1), 0.5, 1e-14);
}

TEST(DecomposeRows, OutOfCone) {
  Matrix z(2, 2);
  z << 1, 1, -1, -1;
  try {
    decompose_rows(z, Matrix::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::out_of_cone);
    EXPECT_EQ(e.indices(), (std::vector<std::size_t>{1}));
  }
}

TEST(DecomposeRows, ScaleFactorsAtLeastOne) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix Yp = unit_rows(random_matrix(3, 5, 100 + seed, 0.0, 1.0));
    const Matrix M = random_matrix(20, 3, 200 + seed, 0.0, 1.0);
    const auto d = check_condition(Yp, M * Yp);
    EXPECT_GE(d.r.minCoeff(), 1.0 - 1e-10);
    EXPECT_LE((d.phi.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
    EXPECT_GE(d.phi.minCoeff(), -1e-10);
  }
}

// Population-derived corners: Z = M Y_P with M >= 0 is recovered exactly.
TEST(ConeProperties, ExactOnIdealCone) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index k = 2 + static_cast<Index>(seed % 3);
    NetworkConfig cfg;
    cfg.n = 40;
    cfg.K = k;
    cfg.seed = 300 + seed;
    cfg.gamma.kind = GammaSpec::Kind::beta;
    const auto sim = gen_dcmmsb(cfg);
    const Matrix Yp = unit_rows(full_top_eigvecs(sim.population.dense(), k).topRows(k));
    Matrix M0 = random_matrix(25, k, 400 + seed, 0.0, 1.0);
    M0.topRows(k) = Matrix::Identity(k, k) * 1.5;
    const auto s = svm_cone(M0 * Yp, k, 0.0, quick());
    for (auto c : s.corners) {
      EXPECT_EQ((M0.row(static_cast<Index>(c)).array() > 0.0).count(), 1) << "seed " << seed;
    }
    EXPECT_LE(permuted_max_abs(M0, s.M), 1e-8) << "seed " << seed;
  }
}

TEST(ConeProperties, OrthogonalInvariance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix Z = random_matrix(30, 3, 500 + seed, 0.1, 1.0);
    const Matrix Q = random_orthogonal(3, 600 + seed);
    const auto a = auto_delta(Z, 3, {}, quick());
    const auto b = auto_delta(Z * Q, 3, {}, quick());
    EXPECT_EQ(a.corners, b.corners);
    EXPECT_LE((a.M - b.M).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ConeProperties, RowScaleInvariance) {
  const Matrix Z = random_matrix(30, 3, 700, 0.1, 1.0);
  Matrix Zs = Z;
  Zs.row(5) *= 3.0;
  Zs.row(17) *= 0.25;
  const auto a = auto_delta(Z, 3, {}, quick());
  const auto b = auto_delta(Zs, 3, {}, quick());
  EXPECT_EQ(a.corners, b.corners);
  Matrix expect = a.M;
  expect.row(5) *= 3.0;
  expect.row(17) *= 0.25;
  EXPECT_LE((expect - b.M).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConeProperties, EigenvectorsVersusProjection) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    NetworkConfig cfg;
    cfg.n = 500;
    cfg.K = 3;
    cfg.mean_degree = 60.0;
    cfg.seed = 800 + seed;
    const auto sim = gen_dcmmsb(cfg);
    EigOptions eo;
    eo.order = EigenOrder::algebraic;
    const Matrix V = top_k_eigs(sim.A, 3, eo).vectors;
    const auto a = auto_delta(V, 3, {}, quick());
    const auto b = auto_delta(V * V.transpose(), 3, {}, quick());
    EXPECT_EQ(a.corners, b.corners);
    EXPECT_LE((a.M - b.M).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(ConeProperties, ConeConditionOnPopulations) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    NetworkConfig cfg;
    cfg.n = 30;
    cfg.K = 2 + static_cast<Index>(seed % 4);
    cfg.seed = 900 + seed;
    cfg.b_offdiag = 0.05 * static_cast<double>(seed % 10);
    cfg.gamma.kind = GammaSpec::Kind::beta;
    const auto sim = gen_dcmmsb(cfg);
    const Matrix Yp = unit_rows(full_top_eigvecs(sim.population.dense(), cfg.K).topRows(cfg.K));
    EXPECT_GT(check_condition(Yp).eta, 0.0) << "seed " << seed;
  }
}
