#include <gtest/gtest.h>

#include "conekit/spectral.hpp"
#include "test_util.hpp"

namespace conekit {
namespace {


SparseMatrix sparse_diag(std::vector<double> d) {
  SparseMatrix m(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m.insert(static_cast<Index>(i), static_cast<Index>(i)) = d[i];
  return m;
}

Matrix planted_two_block() {
  Matrix P = Matrix::Constant(6, 6, 0.2);
  P.topLeftCorner(3, 3).setOnes();
  P.bottomRightCorner(3, 3).setOnes();
  return P;
}

double ortho_error(const Matrix& V) {
  return (V.transpose() * V - Matrix::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff();
}

EigOptions iterative() {
  EigOptions o;
  o.dense_threshold = 0;
  return o;
}

TEST(TopKEigs, DiagonalMatrix) {
  for (const auto& opt : {EigOptions{}, iterative()}) {
    const Spectrum s = top_k_eigs(sparse_diag({3, 2, 1}), 2, opt);
    EXPECT_NEAR(s.values(0), 3.0, 1e-12);
    EXPECT_NEAR(s.values(1), 2.0, 1e-12);
    EXPECT_NEAR(std::abs(s.vectors(0, 0)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(s.vectors(1, 1)), 1.0, 1e-12);
    EXPECT_FALSE(s.degenerate);
  }
}

TEST(TopKEigs, ZeroMatrixIsDegenerate) {
  for (const auto& opt : {EigOptions{}, iterative()}) {
    const Spectrum s = top_k_eigs(Matrix(Matrix::Zero(4, 4)), 1, opt);
    EXPECT_EQ(s.values(0), 0.0);
    EXPECT_NEAR(s.vectors.col(0).norm(), 1.0, 1e-12);
    EXPECT_TRUE(s.degenerate);
  }
}

TEST(TopKEigs, PlantedTwoBlockMatchesFullDecomposition) {
  const Matrix P = planted_two_block();
  // Blocks of J_3: eigenvalues 3(1 + 0.2) and 3(1 - 0.2), rest zero.
  Eigen::SelfAdjointEigenSolver<Matrix> full(P);
  std::vector<double> all(full.eigenvalues().data(), full.eigenvalues().data() + 6);
  std::sort(all.begin(), all.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  EXPECT_NEAR(all[0], 3.6, 1e-12);
  EXPECT_NEAR(all[1], 2.4, 1e-12);
  for (const auto& opt : {EigOptions{}, iterative()}) {
    const Spectrum s = top_k_eigs(P, 2, opt);
    EXPECT_NEAR(s.values(0), all[0], 1e-9);
    EXPECT_NEAR(s.values(1), all[1], 1e-9);
    const Matrix proj = s.vectors * s.vectors.transpose();
    const Matrix proj_full = full.eigenvectors().rightCols(2) * full.eigenvectors().rightCols(2).transpose();
    EXPECT_LT((proj - proj_full).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(TopKEigs, MagnitudeNotSignedOrder) {
  SparseMatrix m = sparse_diag({1.0, -5.0, 2.0});
  const Spectrum s = top_k_eigs(m, 2);
  EXPECT_NEAR(s.values(0), -5.0, 1e-12);
  EXPECT_NEAR(s.values(1), 2.0, 1e-12);
}

TEST(TopKEigs, KLargerThanNIsDimensionError) {
  try {
    top_k_eigs(planted_two_block(), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(TopKEigs, IterativeMatchesDenseOnSparseGraph) {
  auto gen = rng::keyed(11, rng::Stream::edges, 0);
  std::vector<Edge> edges;
  const std::size_t n = 400;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = ((i < 200) == (j < 200)) ? 0.08 : 0.02;
      if (rng::uniform01(gen) < p) edges.push_back({i, j, 1.0});
    }
  }
  const SparseSymAdjacency A(n, edges);
  const Spectrum dense = top_k_eigs(A, 3);
  const Spectrum iter = top_k_eigs(A, 3, iterative());
  EXPECT_TRUE(iter.iterative);
  for (Index k = 0; k < 3; ++k) EXPECT_NEAR(dense.values(k), iter.values(k), 1e-9 * std::abs(dense.values(0)));
  EXPECT_LT(ortho_error(iter.vectors), 1e-10);
  EXPECT_LE(iter.max_residual, 1e-8 * std::abs(iter.values(0)));
  const Matrix Ad = A.to_dense();
  for (Index k = 0; k < 3; ++k) {
    EXPECT_LE((Ad * iter.vectors.col(k) - iter.values(k) * iter.vectors.col(k)).norm(),
              1e-8 * std::abs(iter.values(0)));
  }
}

TEST(TopKEigs, InvariantsOverRandomSymmetricMatrices) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Index n = 5 + static_cast<Index>(seed % 40);
    const Index rank = 1 + static_cast<Index>(seed % 5);
    const Matrix G = testing::random_matrix(n, rank, seed);
    const Vector signs = testing::random_matrix(rank, 1, seed + 1000);
    const Matrix A = G * signs.asDiagonal() * G.transpose();
    for (const auto& opt : {EigOptions{}, iterative()}) {
      const Spectrum s = top_k_eigs(A, rank, opt);
      EXPECT_LE(ortho_error(s.vectors), 1e-10) << seed;
      for (Index k = 1; k < rank; ++k) EXPECT_GE(std::abs(s.values(k - 1)), std::abs(s.values(k)) - 1e-12);
      const Matrix rec = s.vectors * s.values.asDiagonal() * s.vectors.transpose();
      EXPECT_LE((rec - A).cwiseAbs().maxCoeff(), 1e-8) << seed;
    }
  }
}

TEST(TopKSvd, DiagonalAndRankOne) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 5;
  d(1, 1) = 1;
  const Spectrum s = top_k_svd(d, 1);
  EXPECT_NEAR(s.values(0), 5.0, 1e-12);
  EXPECT_NEAR(std::abs(s.vectors(0, 0)), 1.0, 1e-12);

  const Vector a = testing::random_matrix(7, 1, 3);
  const Vector b = testing::random_matrix(4, 1, 4);
  const Spectrum r = top_k_svd(Matrix(a * b.transpose()), 1);
  EXPECT_NEAR(r.values(0), a.norm() * b.norm(), 1e-12);
}

TEST(TopKSvd, RandomMatchesFullSvd) {
  const Matrix U = testing::random_matrix(20, 30, 42);
  Eigen::JacobiSVD<Matrix> full(U, Eigen::ComputeFullU | Eigen::ComputeFullV);
  for (const auto& opt : {EigOptions{}, iterative()}) {
    const Spectrum s = top_k_svd(U, 3, opt);
    for (Index k = 0; k < 3; ++k) {
      EXPECT_NEAR(s.values(k), full.singularValues()(k), 1e-9);
      EXPECT_NEAR(std::abs(s.vectors.col(k).dot(full.matrixU().col(k))), 1.0, 1e-9);
    }
    EXPECT_LE(ortho_error(s.vectors), 1e-10);
    EXPECT_LE(s.max_residual, 1e-9 * s.values(0));
  }
  const Spectrum tall = top_k_svd(Matrix(U.transpose()), 3, iterative());
  for (Index k = 0; k < 3; ++k) EXPECT_NEAR(tall.values(k), full.singularValues()(k), 1e-9);
}

TEST(TopKSvd, SparseInput) {
  const Matrix U = testing::random_matrix(15, 12, 9).cwiseMax(0.3) - Matrix::Constant(15, 12, 0.3);
  const SparseMatrix S = U.sparseView();
  const Spectrum a = top_k_svd(U, 2);
  const Spectrum b = top_k_svd(S, 2, iterative());
  EXPECT_NEAR(a.values(0), b.values(0), 1e-9);
  EXPECT_NEAR(a.values(1), b.values(1), 1e-9);
}

TEST(RowNormalize, Examples) {
  Matrix z(1, 2);
  z << 3, 4;
  const auto nr = row_normalize(z);
  EXPECT_NEAR(nr.Y(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(nr.Y(0, 1), 0.8, 1e-15);
  EXPECT_NEAR(nr.norms(0), 5.0, 1e-15);

  const auto id = row_normalize(Matrix::Identity(4, 4));
  EXPECT_EQ(id.Y, Matrix::Identity(4, 4));
  EXPECT_TRUE(id.norms.isOnes());
}

TEST(RowNormalize, ZeroRowListsIndices) {
  Matrix z(3, 2);
  z << 1, 0, 0, 0, 0, 0;
  try {
    row_normalize(z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_row);
    EXPECT_EQ(e.indices(), (std::vector<std::size_t>{1, 2}));
  }
}

TEST(RowNormalize, IdempotentAndScaleInvariant) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix Z = testing::random_matrix(12, 4, seed);
    const auto once = row_normalize(Z);
    const auto twice = row_normalize(once.Y);
    EXPECT_LE((once.Y - twice.Y).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((once.Y.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
    const double c = 0.1 + 10.0 * static_cast<double>(seed) / 50.0;
    const auto scaled = row_normalize(c * Z);
    EXPECT_LE((scaled.Y - once.Y).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((scaled.norms - c * once.norms).cwiseAbs().maxCoeff(), 1e-12 * c * once.norms.maxCoeff());
  }
}

TEST(SparseSymAdjacency, RejectsBadInput) {
  EXPECT_THROW(SparseSymAdjacency(3, {{0, 0, 1.0}}), Error);
  EXPECT_THROW(SparseSymAdjacency(3, {{0, 1, 1.0}, {1, 0, 1.0}}), Error);
  EXPECT_THROW(SparseSymAdjacency(3, {{0, 3, 1.0}}), Error);
  EXPECT_THROW(SparseSymAdjacency(3, {{0, 1, -1.0}}), Error);
  const SparseSymAdjacency ok(4, {{2, 1, 1.0}, {0, 1, 2.0}});
  EXPECT_EQ(ok.entries()[0].i, 0u);
  EXPECT_EQ(ok.entries()[1].i, 1u);
  EXPECT_EQ(ok.entries()[1].j, 2u);
  EXPECT_EQ(ok.isolated_nodes(), std::vector<std::size_t>{3});
  const Matrix d = ok.to_dense();
  EXPECT_EQ(d, d.transpose());
  EXPECT_EQ(d.diagonal().sum(), 0.0);
}

}  // namespace
}  // namespace conekit
