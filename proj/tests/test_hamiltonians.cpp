#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "rdmcone/fci.hpp"
#include "rdmcone/integrals.hpp"
#include "rdmcone/reduced_hamiltonian.hpp"
#include "support.hpp"

namespace rdmcone {
namespace {

using testing::data_path;

IntegralSet load(const std::string& name) {
  std::ifstream in(data_path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  return parse_fcidump(in);
}

TEST(ParseFcidump, DirectFieldMapping) {
  const auto ints = parse_fcidump(
      "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n"
      " 1.0 1 1 1 1\n -1.0 1 1 0 0\n 0.5 0 0 0 0\n");
  EXPECT_EQ(ints.norb, 2);
  EXPECT_EQ(ints.n_electrons, 2);
  EXPECT_EQ(ints.ms2, 0);
  EXPECT_EQ(ints.h(0, 0), -1.0);
  EXPECT_EQ(ints.v(0, 0, 0, 0), 1.0);
  EXPECT_EQ(ints.core_energy, 0.5);
  EXPECT_EQ(ints.v(1, 1, 1, 1), 0.0);
}

TEST(ParseFcidump, SymmetryCompletion) {
  const auto ints = parse_fcidump("&FCI NORB=2,NELEC=2 /\n0.25 1 2 1 2\n");
  for (auto [p, q, r, s] : std::vector<std::array<int, 4>>{{0, 1, 0, 1}, {1, 0, 0, 1}, {0, 1, 1, 0},
                                                           {1, 0, 1, 0}})
    EXPECT_EQ(ints.v(p, q, r, s), 0.25);
  EXPECT_EQ(ints.v(0, 0, 1, 1), 0.0);
}

TEST(ParseFcidump, MultiLineNamelistAndFortranExponent) {
  const auto ints = parse_fcidump(
      " &FCI NORB=  3,NELEC= 4,MS2=2,\n  ORBSYM=1,1,1,\n  ISYM=1,\n &END\n"
      " 1.5D-01 3 2 0 0\n");
  EXPECT_EQ(ints.norb, 3);
  EXPECT_EQ(ints.ms2, 2);
  EXPECT_DOUBLE_EQ(ints.h(1, 2), 0.15);
  EXPECT_DOUBLE_EQ(ints.h(2, 1), 0.15);
}

TEST(ParseFcidump, Errors) {
  EXPECT_THROW(parse_fcidump("&FCI NELEC=2 &END\n"), ParseError);
  EXPECT_THROW(parse_fcidump("&FCI NORB=2 &END\n"), ParseError);
  EXPECT_THROW(parse_fcidump("&FCI NORB=2,NELEC=2\n"), ParseError);
  try {
    parse_fcidump("&FCI NORB=2,NELEC=2 &END\n1.0 1 1 1 1\n1.0 3 1 1 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
  }
  try {
    parse_fcidump("&FCI NORB=2,NELEC=2 &END\n1.0x 1 1 1 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("malformed"), std::string::npos);
  }
  EXPECT_THROW(parse_fcidump("&FCI NORB=2,NELEC=2 &END\n1.0 1 1 1\n"), ParseError);
}

TEST(SerializeFcidump, RoundTripH2Fixture) {
  const auto ints = load("h2_sto3g.fcidump");
  const std::string once = serialize_fcidump(ints);
  const auto back = parse_fcidump(once);
  EXPECT_EQ(serialize_fcidump(back), once);
  EXPECT_EQ(back.norb, ints.norb);
  EXPECT_EQ(back.n_electrons, ints.n_electrons);
  EXPECT_NEAR(back.core_energy, ints.core_energy, 1e-14);
  EXPECT_LE((back.h - ints.h).cwiseAbs().maxCoeff(), 1e-14);
  for (std::size_t i = 0; i < ints.eri.size(); ++i) {
    EXPECT_EQ(back.eri[i] != 0.0, ints.eri[i] != 0.0);
    EXPECT_NEAR(back.eri[i], ints.eri[i], 1e-14 * std::max(1.0, std::abs(ints.eri[i])));
  }
}

TEST(HubbardChain, TwoSites) {
  const auto ints = hubbard_chain(2, 1.0, 0.0);
  Matrix expected(2, 2);
  expected << 0, -1, -1, 0;
  EXPECT_EQ(ints.h, expected);
  for (double v : ints.eri) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(hubbard_chain(1, 1.0, 1.0), Error);
}

TEST(HubbardChain, PathGraphSpectrum) {
  const auto ints = hubbard_chain(4, 1.0, 0.0);
  const auto s = eigendecompose(ints.h);
  const double a = 2 * std::cos(M_PI / 5), b = 2 * std::cos(2 * M_PI / 5);
  EXPECT_NEAR(a, 1.618034, 1e-6);
  EXPECT_NEAR(b, 0.618034, 1e-6);
  EXPECT_NEAR(s.eigenvalues(0), a, 1e-12);
  EXPECT_NEAR(s.eigenvalues(1), b, 1e-12);
  EXPECT_NEAR(s.eigenvalues(2), -b, 1e-12);
  EXPECT_NEAR(s.eigenvalues(3), -a, 1e-12);
}

TEST(HubbardChain, PeriodicAndRepulsion) {
  const auto ints = hubbard_chain(4, 0.5, 3.0, true);
  EXPECT_EQ(ints.h(0, 3), -0.5);
  EXPECT_EQ(ints.h(3, 0), -0.5);
  EXPECT_EQ(ints.v(2, 2, 2, 2), 3.0);
  EXPECT_EQ(ints.v(1, 1, 2, 2), 0.0);
}

TEST(ReducedHamiltonian, ZeroIntegralsGiveZeroK) {
  const IntegralSet ints(3, 2);
  const auto rh = assemble_reduced_hamiltonian(ints, 2);
  EXPECT_EQ(rh.K.matrix().cwiseAbs().maxCoeff(), 0.0);
  std::mt19937_64 rng(1);
  const auto fci = fci_ground_state(testing::random_integrals(3, 2, rng), 2, 0);
  EXPECT_EQ(hermitian_inner_product(rh.K, fci.rdm2.D), 0.0);
}

TEST(ReducedHamiltonian, RejectsSingleParticle) {
  EXPECT_THROW(assemble_reduced_hamiltonian(hubbard_chain(2, 1, 1), 1), Error);
}

TEST(ReducedHamiltonian, HubbardDimerEnergy) {
  const auto ints = hubbard_chain(2, 1.0, 4.0);
  const auto rh = assemble_reduced_hamiltonian(ints, 2);
  const auto fci = fci_ground_state(ints, 2, 0);
  EXPECT_NEAR(testing::hubbard_dimer_energy(1, 4), -0.828427, 1e-6);
  EXPECT_NEAR(hermitian_inner_product(rh.K, fci.rdm2.D), testing::hubbard_dimer_energy(1, 4),
              1e-10);
  EXPECT_LE(asymmetry(rh.K.matrix()), 1e-14);
}

TEST(ReducedHamiltonian, H2FixtureEnergy) {
  const auto ints = load("h2_sto3g.fcidump");
  const auto rh = assemble_reduced_hamiltonian(ints, 2);
  const auto fci = fci_ground_state(ints, 2, 0);
  EXPECT_NEAR(rh.energy(fci.rdm2.D), fci.energy, 1e-9);
  // pyscf reference for H2/STO-3G at 0.74 A
  EXPECT_NEAR(fci.energy, -1.1372838345, 1e-8);
}

TEST(ReducedHamiltonian, EnergyConsistencyOnRandomIntegrals) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const int norb = 2 + trial % 3;                 // r = 4, 6, 8
    const int n = 2 + trial % (2 * norb - 2);       // 2 <= N < r
    const auto ints = testing::random_integrals(norb, n, rng);
    const auto rh = assemble_reduced_hamiltonian(ints, n);
    const auto fci = fci_lowest(ints, n);
    EXPECT_LE(std::abs(rh.energy(fci.rdm2.D) - fci.energy), 1e-8 * std::max(1.0, std::abs(fci.energy)))
        << "trial " << trial;
  }
}

TEST(ReducedHamiltonian, Linearity) {
  std::mt19937_64 rng(8);
  const auto a = testing::random_integrals(3, 3, rng);
  const auto b = testing::random_integrals(3, 3, rng);
  const double alpha = 0.7, beta = -1.3;
  const auto ka = assemble_reduced_hamiltonian(a, 3);
  const auto kb = assemble_reduced_hamiltonian(b, 3);
  const auto kc = assemble_reduced_hamiltonian(linear_combination(alpha, a, beta, b), 3);
  EXPECT_LE((kc.K.matrix() - alpha * ka.K.matrix() - beta * kb.K.matrix()).cwiseAbs().maxCoeff(),
            1e-13);
  EXPECT_NEAR(kc.core_energy, alpha * ka.core_energy + beta * kb.core_energy, 1e-14);
}

TEST(ReducedHamiltonian, FreeFermionsFillLowestLevels) {
  for (int sites : {2, 3, 4}) {
    const auto ints = hubbard_chain(sites, 1.0, 0.0);
    const auto levels = eigendecompose(spin_orbital_one_body(ints)).eigenvalues;
    for (int n = 2; n <= 2 * sites - 1; ++n) {
      double expected = 0.0;
      for (int k = 0; k < n; ++k) expected += levels(levels.size() - 1 - k);
      const auto fci = fci_lowest(ints, n);
      EXPECT_NEAR(fci.energy, expected, 1e-10) << sites << " sites, N=" << n;
      EXPECT_NEAR(assemble_reduced_hamiltonian(ints, n).energy(fci.rdm2.D), expected, 1e-9);
    }
  }
}

}  // namespace
}  // namespace rdmcone
