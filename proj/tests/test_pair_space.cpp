#include <gtest/gtest.h>

#include <random>

#include "rdmcone/pair_space.hpp"

namespace rdmcone {
namespace {

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = normal(rng);
  return m;
}

TEST(PairBasis, IndexExamples) {
  const PairBasis b(4);
  EXPECT_EQ(b.dim(), 6);
  EXPECT_EQ(b.index_of(0, 1), (SignedIndex{0, 1}));
  EXPECT_EQ(b.index_of(3, 2), (SignedIndex{5, -1}));
  EXPECT_THROW(b.index_of(2, 2), Error);
  EXPECT_THROW(b.index_of(0, 4), Error);
  EXPECT_THROW(b.index_of(-1, 2), Error);
}

TEST(PairBasis, DiagonalErrorMessage) {
  try {
    PairBasis(4).index_of(2, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "diagonal pair not in antisymmetric space");
  }
}

TEST(PairBasis, BijectionAndRoundTrip) {
  for (int r = 2; r <= 12; ++r) {
    const PairBasis b(r);
    ASSERT_EQ(b.dim(), r * (r - 1) / 2);
    std::vector<int> seen(b.dim(), 0);
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j) {
        const auto idx = b.index_of(i, j);
        ASSERT_EQ(idx.sign, 1);
        ++seen[idx.index];
        EXPECT_EQ(b.pair_of(idx.index), std::make_pair(i, j));
        EXPECT_EQ(b.index_of(j, i), (SignedIndex{idx.index, -1}));
      }
    for (int count : seen) EXPECT_EQ(count, 1);
  }
}

TEST(PairBasis, LexicographicOrder) {
  const PairBasis b(5);
  int expected = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) EXPECT_EQ(b.ordered_index(i, j), expected++);
}

TEST(PackedMatrix, SwappedOrbitalsFlipSignByProductOfSigns) {
  std::mt19937_64 rng(1);
  const PairBasis b(5);
  PackedMatrix m(b, random_symmetric(b.dim(), rng));
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      for (int k = 0; k < 5; ++k)
        for (int l = k + 1; l < 5; ++l) {
          const double v = m.element(i, j, k, l);
          EXPECT_EQ(m.element(j, i, k, l), -v);
          EXPECT_EQ(m.element(i, j, l, k), -v);
          EXPECT_EQ(m.element(j, i, l, k), v);
        }
  m.set_element(1, 0, 3, 2, 0.75);
  EXPECT_EQ(m(b.ordered_index(0, 1), b.ordered_index(2, 3)), 0.75);
  m.set_element(1, 0, 2, 3, 0.5);
  EXPECT_EQ(m(b.ordered_index(0, 1), b.ordered_index(2, 3)), -0.5);
}

TEST(InnerProduct, Examples) {
  const PairBasis b(4);
  const auto id = PackedMatrix::identity(b);
  EXPECT_DOUBLE_EQ(hermitian_inner_product(id, id), 6.0);

  std::mt19937_64 rng(7);
  const PackedMatrix x(b, random_symmetric(6, rng));
  const PackedMatrix y(b, random_symmetric(6, rng));
  EXPECT_NEAR(hermitian_inner_product(id, x), x.trace(), 1e-14);

  double naive = 0.0;
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 6; ++c) naive += x(a, c) * y(c, a);
  EXPECT_NEAR(hermitian_inner_product(x, y), naive, 1e-12);
}

TEST(InnerProduct, SymmetricAndBilinear) {
  std::mt19937_64 rng(11);
  const PairBasis b(5);
  for (int trial = 0; trial < 20; ++trial) {
    const PackedMatrix x(b, random_symmetric(b.dim(), rng));
    const PackedMatrix y(b, random_symmetric(b.dim(), rng));
    const PackedMatrix z(b, random_symmetric(b.dim(), rng));
    EXPECT_NEAR(hermitian_inner_product(x, y), hermitian_inner_product(y, x), 1e-12);
    const double alpha = 0.3, beta = -1.7;
    EXPECT_NEAR(hermitian_inner_product(alpha * x + beta * y, z),
                alpha * hermitian_inner_product(x, z) + beta * hermitian_inner_product(y, z),
                1e-11);
  }
}

TEST(InnerProduct, BasisMismatch) {
  EXPECT_THROW(hermitian_inner_product(PackedMatrix(PairBasis(4)), PackedMatrix(PairBasis(5))),
               Error);
}

TEST(Eigendecompose, Examples) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const auto s = eigendecompose(d);
  EXPECT_NEAR(s.eigenvalues(0), 3, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), 2, 1e-14);
  EXPECT_NEAR(s.eigenvalues(2), 1, 1e-14);

  const auto id = eigendecompose(PackedMatrix::identity(PairBasis(4)));
  ASSERT_EQ(id.eigenvalues.size(), 6);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(id.eigenvalues(i), 1.0, 1e-14);
}

TEST(Eigendecompose, ReconstructionAndOrthonormality) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = random_symmetric(10, rng);
    const auto s = eigendecompose(m);
    EXPECT_LE((m - s.reconstruct()).norm(), 1e-10 * m.norm());
    EXPECT_LE((s.eigenvectors.transpose() * s.eigenvectors - Matrix::Identity(10, 10)).norm(),
              1e-10);
    for (int i = 0; i + 1 < 10; ++i) EXPECT_GE(s.eigenvalues(i), s.eigenvalues(i + 1));
  }
}

TEST(Eigendecompose, RejectsNonSymmetric) {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 2) = 1.0;
  EXPECT_THROW(eigendecompose(m), Error);
}

TEST(ProjectPsd, Idempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = random_symmetric(8, rng);
    const Matrix p = project_psd(m);
    EXPECT_LE((project_psd(p) - p).norm(), 1e-9);
    EXPECT_GE(min_eigenvalue(p), -1e-12);
    const auto split = split_psd(m);
    EXPECT_LE((split.positive + split.negative - m).norm(), 1e-10);
  }
}

TEST(FullTensor, PackAdjointIsAdjointOfUnpack) {
  std::mt19937_64 rng(9);
  const PairBasis b(5);
  const PackedMatrix d(b, random_symmetric(b.dim(), rng));
  const Matrix t = random_symmetric(25, rng);
  EXPECT_NEAR(frobenius_inner(t, unpack_full(d)), hermitian_inner_product(pack_adjoint(t, b), d),
              1e-11);
}

}  // namespace
}  // namespace rdmcone
