#pragma once

#include "rdmcone/integrals.hpp"
#include "rdmcone/pair_space.hpp"

namespace rdmcone {

/// Two-particle reduced Hamiltonian: for any N-particle 2-RDM D,
/// E = Tr(K D) + core_energy.
struct ReducedHamiltonian {
  PackedMatrix K;
  int n_particles = 0;
  double core_energy = 0.0;

  const PairBasis& basis() const noexcept { return K.basis(); }
  int rank() const noexcept { return K.basis().rank(); }
  /// Packed trace of every N-particle 2-RDM, N(N-1)/2.
  double pair_count() const noexcept { return 0.5 * n_particles * (n_particles - 1); }

  double energy(const PackedMatrix& d) const { return hermitian_inner_product(K, d) + core_energy; }
};

/// Folds the one-electron integrals into pair space through the 1/(N-1)
/// contraction identity and adds the antisymmetrized two-electron integrals.
inline ReducedHamiltonian assemble_reduced_hamiltonian(const IntegralSet& ints, int n_particles) {
  if (n_particles <= 1) throw Error("reduced Hamiltonian needs N > 1");
  const int r = ints.spin_orbitals();
  if (n_particles > r) throw Error("more particles than spin orbitals");
  const Matrix h = spin_orbital_one_body(ints);
  PackedMatrix k = two_body_operator(ints);
  const PairBasis& basis = k.basis();
  const double scale = 1.0 / (n_particles - 1);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const int a = basis.ordered_index(i, j);
      for (int p = 0; p < r; ++p)
        for (int q = p + 1; q < r; ++q) {
          double one = 0.0;
          if (j == q) one += h(i, p);
          if (i == p) one += h(j, q);
          if (j == p) one -= h(i, q);
          if (i == q) one -= h(j, p);
          if (one != 0.0) k(a, basis.ordered_index(p, q)) += scale * one;
        }
    }
  k.symmetrize();
  return {std::move(k), n_particles, ints.core_energy};
}

}  // namespace rdmcone
