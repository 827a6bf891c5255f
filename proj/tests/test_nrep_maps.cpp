#include <gtest/gtest.h>

#include <random>

#include "oracle/fock_space.hpp"
#include "rdmcone/fci.hpp"
#include "rdmcone/nrep_maps.hpp"
#include "support.hpp"

namespace rdmcone {
namespace {

using testing::FockSpace;

PackedMatrix packed_from_full(const Matrix& full, const PairBasis& b) {
  PackedMatrix out(b);
  for (int a = 0; a < b.dim(); ++a)
    for (int c = 0; c < b.dim(); ++c) {
      const auto [i, j] = b.pair_of(a);
      const auto [k, l] = b.pair_of(c);
      out(a, c) = full(i * b.rank() + j, k * b.rank() + l);
    }
  return out;
}

TwoRDM fock_two_rdm(const FockSpace& fock, const testing::Vector& psi, int n) {
  return {packed_from_full(fock.two_rdm_full(psi), PairBasis(fock.rank())), n};
}

Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = normal(rng);
  return m;
}

TwoRDM determinant_rdm(int r, std::initializer_list<int> occupied) {
  const PairBasis b(r);
  TwoRDM d{PackedMatrix(b), static_cast<int>(occupied.size())};
  for (int i : occupied)
    for (int j : occupied)
      if (i < j) d.D(b.ordered_index(i, j), b.ordered_index(i, j)) = 1.0;
  return d;
}

FCIResult hubbard_fci(int sites, double u) {
  return fci_ground_state(hubbard_chain(sites, 1.0, u), sites, sites % 2);
}

TEST(Contraction, Determinant) {
  const auto g = contract_to_1rdm(determinant_rdm(6, {0, 1}));
  Matrix expected = Matrix::Zero(6, 6);
  expected(0, 0) = expected(1, 1) = 1.0;
  EXPECT_LE((g.gamma - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Contraction, HubbardDimerParticleHoleSymmetry) {
  const auto fci = hubbard_fci(2, 4.0);
  const auto g = contract_to_1rdm(fci.rdm2);
  EXPECT_NEAR(g.gamma.trace(), 2.0, 1e-12);
  const auto ev = eigendecompose(g.gamma).eigenvalues;
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ev(i) + ev(3 - i), 1.0, 1e-12);
  EXPECT_LE((g.gamma - fci.rdm1.gamma).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Contraction, RejectsBadNormalization) {
  auto d = determinant_rdm(6, {0, 1, 2});
  d.D.matrix() *= 1.01;
  EXPECT_THROW(contract_to_1rdm(d), Error);
}

TEST(Contraction, MatchesFciOneRdm) {
  for (double u : {0.0, 4.0, 8.0}) {
    const auto fci = hubbard_fci(4, u);
    EXPECT_LE((contract_to_1rdm(fci.rdm2).gamma - fci.rdm1.gamma).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(LiftQ2, EmptySystemIsIdentity) {
  const TwoRDM empty{PackedMatrix(PairBasis(4)), 0};
  EXPECT_LE((lift_Q2(empty).matrix() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LiftQ2, MatchesFockSpaceOnHubbardDimer) {
  const auto fci = hubbard_fci(2, 4.0);
  const DeterminantBasis basis(4, 2, 0);
  const FockSpace fock(4);
  testing::Vector psi = testing::Vector::Zero(fock.dim());
  for (std::size_t i = 0; i < basis.size(); ++i) psi(static_cast<int>(basis[i])) = fci.ground_vector(i);
  const auto q = lift_Q2(fci.rdm2);
  const PairBasis b(4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = k + 1; l < 4; ++l) {
          // <a_i a_j a_l^+ a_k^+>
          const double oracle = fock.expectation(
              fock.a(i) * fock.a(j) * fock.adag(l) * fock.adag(k), psi);
          EXPECT_NEAR(q(b.ordered_index(i, j), b.ordered_index(k, l)), oracle, 1e-10);
        }
}

TEST(LiftG2, ZeroAndDeterminant) {
  const TwoRDM zero{PackedMatrix(PairBasis(4)), 2};
  EXPECT_EQ(lift_G2(zero).cwiseAbs().maxCoeff(), 0.0);
  const auto g = lift_G2(determinant_rdm(4, {0, 1}));
  const auto ev = eigendecompose(g).eigenvalues;
  for (int i = 0; i < ev.size(); ++i)
    EXPECT_NEAR(ev(i), std::round(ev(i)), 1e-12) << "eigenvalue " << ev(i);
  // number operator direction carries N, each particle-hole excitation 1
  EXPECT_NEAR(ev(0), 2.0, 1e-12);
  for (int i = 1; i <= 4; ++i) EXPECT_NEAR(ev(i), 1.0, 1e-12);
  EXPECT_NEAR(ev(5), 0.0, 1e-12);
  EXPECT_NEAR(ev.minCoeff(), 0.0, 1e-12);
}

TEST(OracleEquivalence, RandomWavefunctions) {
  std::mt19937_64 rng(31);
  for (int r : {4, 5, 6}) {
    const FockSpace fock(r);
    const PairBasis b(r);
    for (int n = 2; n <= 3; ++n) {
      for (int trial = 0; trial < 3; ++trial) {
        const auto psi = fock.random_state(n, rng);
        const auto d = fock_two_rdm(fock, psi, n);
        const auto q = lift_Q2(d);
        const Matrix g = lift_G2(d);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j)
            for (int k = 0; k < r; ++k)
              for (int l = 0; l < r; ++l) {
                const double g_oracle =
                    fock.expectation(fock.adag(i) * fock.a(j) * fock.adag(l) * fock.a(k), psi);
                ASSERT_NEAR(g(i * r + j, k * r + l), g_oracle, 1e-10);
                if (i < j && k < l) {
                  const double q_oracle = fock.expectation(
                      fock.a(i) * fock.a(j) * fock.adag(l) * fock.adag(k), psi);
                  ASSERT_NEAR(q(b.ordered_index(i, j), b.ordered_index(k, l)), q_oracle, 1e-10);
                }
              }
      }
    }
  }
}

TEST(ExactStatePositivity, FciStatesOfTestHamiltonians) {
  std::mt19937_64 rng(5);
  for (int sites : {2, 3, 4})
    for (double u : {0.0, 2.0, 4.0, 8.0}) {
      const auto fci = hubbard_fci(sites, u);
      if (fci.degenerate) continue;
      EXPECT_GE(min_eigenvalue(fci.rdm2.D.matrix()), -1e-10);
      EXPECT_GE(min_eigenvalue(lift_Q2(fci.rdm2).matrix()), -1e-10);
      EXPECT_GE(min_eigenvalue(lift_G2(fci.rdm2)), -1e-10);
      for (int k = 0; k < 100; ++k) {
        const auto c = T2FactorCoefficients::random(fci.rdm2.basis(), rng);
        EXPECT_GE(hermitian_inner_product(t2_dual_element(c, fci.rdm2.n_particles).B, fci.rdm2.D),
                  -1e-10);
      }
    }
}

TEST(T2Element, ZeroCoefficients) {
  const T2FactorCoefficients c(PairBasis(4));
  EXPECT_EQ(t2_dual_element(c, 2).B.matrix().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(t2_dual_element(c, 1), Error);
}

testing::Matrix t2_operator(const FockSpace& fock, const T2FactorCoefficients& c) {
  const int r = fock.rank();
  testing::Matrix op = testing::Matrix::Zero(fock.dim(), fock.dim());
  for (int j = 0; j < r; ++j)
    for (int k = j + 1; k < r; ++k)
      for (int l = 0; l < r; ++l) {
        const double v = c.c(c.basis.ordered_index(j, k), l);
        if (v != 0.0) op += v * fock.adag(j) * fock.adag(k) * fock.a(l);
      }
  return op * op.transpose() + op.transpose() * op;
}

TEST(T2Element, SingleCoefficientMatchesOperator) {
  const FockSpace fock(4);
  T2FactorCoefficients c(PairBasis(4));
  c.c(c.basis.ordered_index(0, 1), 2) = 1.0;
  const auto b = t2_dual_element(c, 2);
  EXPECT_LE(asymmetry(b.B.matrix()), 1e-14);
  const auto op = t2_operator(fock, c);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto psi = fock.random_state(2, rng);
    EXPECT_NEAR(hermitian_inner_product(b.B, fock_two_rdm(fock, psi, 2).D),
                fock.expectation(op, psi), 1e-10);
  }
}

TEST(T2Element, RandomCoefficientsMatchOperator) {
  const FockSpace fock(6);
  std::mt19937_64 rng(13);
  for (int n = 2; n <= 3; ++n)
    for (int trial = 0; trial < 5; ++trial) {
      const auto c = T2FactorCoefficients::random(PairBasis(6), rng);
      const auto b = t2_dual_element(c, n);
      const auto op = t2_operator(fock, c);
      const auto psi = fock.random_state(n, rng);
      EXPECT_NEAR(hermitian_inner_product(b.B, fock_two_rdm(fock, psi, n).D),
                  fock.expectation(op, psi), 1e-10);
    }
}

TEST(T2Element, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const PairBasis b(6);
  const int n = 3;
  const PackedMatrix w(b, random_symmetric(b.dim(), rng));
  const Matrix w_full = unpack_full(w);
  Matrix c = T2FactorCoefficients::random(b, rng).c;
  const Matrix grad = t2_gradient(w_full, c, b, n);
  auto value = [&](const Matrix& cc) { return hermitian_inner_product(w, t2_element_matrix(cc, b, n)); };
  const double h = 1e-6;
  for (int trial = 0; trial < 25; ++trial) {
    const int row = static_cast<int>(rng() % b.dim()), col = static_cast<int>(rng() % 6);
    Matrix cp = c, cm = c;
    cp(row, col) += h;
    cm(row, col) -= h;
    EXPECT_NEAR((value(cp) - value(cm)) / (2 * h), grad(row, col), 1e-6);
  }
}

TEST(DualElements, D2RankOne) {
  std::mt19937_64 rng(1);
  const PairBasis b(4);
  Vector v = Vector::Random(6);
  const auto e = pullback_dual_element(Condition::D2, v * v.transpose(), b, 2);
  const auto fci = hubbard_fci(2, 4.0);
  EXPECT_NEAR(hermitian_inner_product(e.B, fci.rdm2.D), v.dot(fci.rdm2.D.matrix() * v), 1e-12);
  EXPECT_GE(hermitian_inner_product(e.B, fci.rdm2.D), 0.0);
}

TEST(DualElements, Q2PullbackOfIdentity) {
  for (double u : {0.0, 4.0}) {
    const auto fci = hubbard_fci(4, u);
    const int dim = fci.rdm2.D.dim();
    const auto e = pullback_dual_element(Condition::Q2, Matrix::Identity(dim, dim),
                                         fci.rdm2.basis(), 4);
    const double lhs = hermitian_inner_product(e.B, fci.rdm2.D);
    EXPECT_NEAR(lhs, lift_Q2(fci.rdm2).trace(), 1e-10);
    EXPECT_GE(lhs, 0.0);
  }
}

TEST(DualElements, G2PullbackAdjointIdentity) {
  std::mt19937_64 rng(2);
  const PairBasis b(6);
  const Vector v = Vector::Random(36);
  const auto e = pullback_dual_element(Condition::G2, v * v.transpose(), b, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const PackedMatrix d(b, random_symmetric(b.dim(), rng));
    EXPECT_NEAR(hermitian_inner_product(e.B, d), v.dot(g2_map(d, 3) * v), 1e-10);
  }
}

TEST(DualElements, RejectNonPsdFactor) {
  Matrix m = Matrix::Identity(6, 6);
  m(0, 0) = -1.0;
  EXPECT_THROW(pullback_dual_element(Condition::D2, m, PairBasis(4), 2), Error);
  EXPECT_THROW(dq_dual_elements(Condition::Q2, m, PairBasis(4), 2), Error);
}

TEST(DualElements, SpectralSplitSumsToPullback) {
  std::mt19937_64 rng(3);
  const PairBasis b(4);
  const Matrix f = Matrix::Random(6, 3);
  const Matrix p = f * f.transpose();
  const auto parts = dq_dual_elements(Condition::Q2, p, b, 2);
  EXPECT_EQ(parts.size(), 3u);
  PackedMatrix sum(b);
  for (const auto& e : parts) sum += e.B;
  EXPECT_LE((sum.matrix() - pullback_dual_element(Condition::Q2, p, b, 2).B.matrix())
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(AdjointIdentity, LiftingMaps) {
  std::mt19937_64 rng(41);
  for (int r : {4, 6}) {
    const PairBasis b(r);
    for (int n : {2, 3}) {
      const PackedMatrix d(b, random_symmetric(b.dim(), rng));
      const PackedMatrix xq(b, random_symmetric(b.dim(), rng));
      const Matrix xg = random_symmetric(r * r, rng);
      EXPECT_NEAR(hermitian_inner_product(xq, q2_linear(d, n)),
                  hermitian_inner_product(q2_linear_adjoint(xq, n), d), 1e-10);
      EXPECT_NEAR(hermitian_inner_product(xq, q2_homogeneous(d, n)),
                  hermitian_inner_product(q2_homogeneous_adjoint(xq, n), d), 1e-10);
      EXPECT_NEAR(frobenius_inner(xg, g2_map(d, n)),
                  hermitian_inner_product(g2_adjoint(xg, b, n), d), 1e-10);
    }
  }
}

TEST(LiftQ2, HomogeneousFormAgreesOnNormalizedRdms) {
  const auto fci = hubbard_fci(3, 2.0);
  EXPECT_LE((q2_homogeneous(fci.rdm2.D, 3).matrix() - lift_Q2(fci.rdm2).matrix()).cwiseAbs().maxCoeff(),
            1e-12);
}

}  // namespace
}  // namespace rdmcone
