#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "rdmcone/nrep_maps.hpp"
#include "rdmcone/orbdata.hpp"

namespace rdmcone {

inline constexpr double kDebyePerAtomicUnit = 2.541746;

/// gamma_spatial[p][q] = gamma[2p][2q] + gamma[2p+1][2q+1]
inline Matrix spin_summed(const Matrix& gamma) {
  if (gamma.rows() % 2 != 0) throw Error("spin-orbital 1-RDM must have even dimension");
  const int n = static_cast<int>(gamma.rows()) / 2;
  Matrix out(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) out(p, q) = gamma(2 * p, 2 * q) + gamma(2 * p + 1, 2 * q + 1);
  return out;
}

enum class OccupationScale {
  /// nu in [0,1] per spin orbital
  Spin,
  /// spatial occupations n in [0,2] entered as nu = n/2, each counted once
  SpatialHalved,
};

struct EntropyConvention {
  OccupationScale scale = OccupationScale::Spin;
  bool log2 = false;
};

/// S = -sum nu ln nu with 0 ln 0 = 0; occupations are clipped to [0, cap].
inline double von_neumann_entropy(const std::vector<double>& occupations,
                                  EntropyConvention convention = {}) {
  const double cap = convention.scale == OccupationScale::Spin ? 1.0 : 2.0;
  double s = 0.0;
  for (double raw : occupations) {
    if (raw < -1e-8) throw Error("negative occupation number");
    const double nu = std::clamp(raw, 0.0, cap) / cap;
    // roundoff around 0 and 1 would otherwise leave ~1e-15 for idempotent gamma
    if (nu > 1e-12 && nu < 1.0 - 1e-12) s -= nu * std::log(nu);
  }
  return convention.log2 ? s / std::log(2.0) : s;
}

struct NaturalOrbitalReport {
  /// Nonincreasing, clipped to [0, 1] (spin) or [0, 2] (spin-summed).
  std::vector<double> occupations;
  std::vector<double> raw_occupations;
  bool spin_summed = false;
  double entropy = 0.0;
  /// Columns are the natural orbitals.
  Matrix rotation;
};

inline NaturalOrbitalReport natural_orbitals(const OneRDM& gamma, bool spin_summed_blocks,
                                             EntropyConvention convention = {}) {
  Matrix g = spin_summed_blocks ? spin_summed(gamma.gamma) : gamma.gamma;
  symmetrize(g);
  const Spectrum s = eigendecompose(g);
  const int n = static_cast<int>(g.rows());
  const double cap = spin_summed_blocks ? 2.0 : 1.0;
  NaturalOrbitalReport out;
  out.spin_summed = spin_summed_blocks;
  for (int i = 0; i < n; ++i) {
    out.raw_occupations.push_back(s.eigenvalues(i));
    out.occupations.push_back(std::clamp(s.eigenvalues(i), 0.0, cap));
  }
  out.rotation = s.eigenvectors;
  // Entropy is always evaluated on spin-orbital occupations.
  std::vector<double> spin_occ;
  if (spin_summed_blocks) {
    for (double v : out.occupations) {
      spin_occ.push_back(v / 2);
      spin_occ.push_back(v / 2);
    }
  } else {
    spin_occ = out.occupations;
  }
  if (convention.scale == OccupationScale::SpatialHalved) {
    std::vector<double> spatial;
    if (spin_summed_blocks) {
      spatial = out.occupations;
    } else {
      const NaturalOrbitalReport summed = natural_orbitals(gamma, true);
      spatial = summed.occupations;
    }
    out.entropy = von_neumann_entropy(spatial, convention);
  } else {
    out.entropy = von_neumann_entropy(spin_occ, convention);
  }
  return out;
}

/// Spin-summed AO density P = C gamma_spatial C^T.
inline Matrix ao_density(const OneRDM& gamma, const OrbitalData& orbitals) {
  const Matrix g = spin_summed(gamma.gamma);
  if (g.rows() != orbitals.n_mo()) throw Error("1-RDM dimension does not match the MO count");
  return orbitals.mo_coefficients * g * orbitals.mo_coefficients.transpose();
}

/// Sum of P_{mu nu}^2 over unordered AO pairs on different atoms.
inline double metallic_character(const OneRDM& gamma, const OrbitalData& orbitals) {
  if (static_cast<int>(orbitals.ao_to_atom.size()) != orbitals.n_ao())
    throw Error("metallic character needs an atom for every AO");
  const Matrix p = ao_density(gamma, orbitals);
  double sum = 0.0;
  for (int mu = 0; mu < p.rows(); ++mu)
    for (int nu = mu + 1; nu < p.cols(); ++nu)
      if (orbitals.ao_to_atom[mu] != orbitals.ao_to_atom[nu]) sum += p(mu, nu) * p(mu, nu);
  return sum;
}

/// Lattice analog: sum over nearest-neighbour bonds of the squared
/// spin-summed 1-RDM element.
inline double bond_coherence(const OneRDM& gamma, bool periodic = false) {
  const Matrix g = spin_summed(gamma.gamma);
  const int l = static_cast<int>(g.rows());
  double sum = 0.0;
  for (int i = 0; i + 1 < l; ++i) sum += g(i, i + 1) * g(i, i + 1);
  if (periodic && l > 2) sum += g(l - 1, 0) * g(l - 1, 0);
  return sum;
}

/// q_A = Z_A - sum_{mu on A} (P S)_{mu mu}
inline std::vector<double> mulliken_charges(const OneRDM& gamma, const OrbitalData& orbitals) {
  if (orbitals.ao_overlap.rows() != orbitals.n_ao() ||
      static_cast<int>(orbitals.ao_to_atom.size()) != orbitals.n_ao())
    throw Error("overlap or atom map does not match the AO count");
  const Matrix ps = ao_density(gamma, orbitals) * orbitals.ao_overlap;
  std::vector<double> q = orbitals.nuclear_charges;
  for (int mu = 0; mu < ps.rows(); ++mu) q[orbitals.ao_to_atom[mu]] -= ps(mu, mu);
  return q;
}

enum class OperatorBasis {
  /// Same spin-orbital basis as gamma.
  SpinOrbital,
  /// Spin-free operator over spatial MOs.
  SpatialMO,
  /// Spin-free operator over AOs; needs orbital data.
  AtomicOrbital,
};

/// Tr(gamma O) in the declared basis.
inline double one_body_expectation(const OneRDM& gamma, const Matrix& op,
                                   OperatorBasis basis = OperatorBasis::SpinOrbital,
                                   const OrbitalData* orbitals = nullptr) {
  switch (basis) {
    case OperatorBasis::SpinOrbital:
      if (op.rows() != gamma.gamma.rows() || op.cols() != gamma.gamma.cols())
        throw Error("operator dimension does not match the 1-RDM");
      return (gamma.gamma.transpose().array() * op.array()).sum();
    case OperatorBasis::SpatialMO: {
      const Matrix g = spin_summed(gamma.gamma);
      if (op.rows() != g.rows() || op.cols() != g.cols())
        throw Error("operator dimension does not match the spatial 1-RDM");
      return (g.transpose().array() * op.array()).sum();
    }
    case OperatorBasis::AtomicOrbital: {
      if (!orbitals) throw Error("AO operator needs orbital data");
      const Matrix p = ao_density(gamma, *orbitals);
      if (op.rows() != p.rows() || op.cols() != p.cols())
        throw Error("operator dimension does not match the AO count");
      return (p.transpose().array() * op.array()).sum();
    }
  }
  return 0.0;
}

/// Electronic plus nuclear dipole in debye.
inline std::array<double, 3> dipole_moment(const OneRDM& gamma, const OrbitalData& orbitals) {
  if (!orbitals.dipole_integrals) throw Error("orbital data carries no dipole integrals");
  std::array<double, 3> mu{};
  for (int x = 0; x < 3; ++x) {
    double v = -one_body_expectation(gamma, (*orbitals.dipole_integrals)[x],
                                     OperatorBasis::AtomicOrbital, &orbitals);
    for (int a = 0; a < orbitals.n_atoms(); ++a)
      v += orbitals.nuclear_charges[a] * orbitals.nuclear_coordinates(a, x);
    mu[x] = v * kDebyePerAtomicUnit;
  }
  return mu;
}

/// Tr(D O) with the packed convention of the energy functional.
inline double two_body_expectation(const TwoRDM& d, const PackedMatrix& op) {
  if (op.basis().rank() != d.basis().rank()) throw Error("two-body operator has a different pair basis");
  return hermitian_inner_product(d.D, op);
}

}  // namespace rdmcone
