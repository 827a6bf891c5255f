#pragma once

#include <cmath>
#include <random>
#include <string>

#include "rdmcone/integrals.hpp"

namespace rdmcone::testing {

/// U/2 - sqrt((U/2)^2 + 4 t^2): lowest singlet of the two-site Hubbard model.
inline double hubbard_dimer_energy(double t, double u) {
  return u / 2 - std::sqrt(u * u / 4 + 4 * t * t);
}

/// Sum of the N/2 lowest open-chain levels -2t cos(k pi/(L+1)), doubly occupied.
inline double free_chain_energy(int sites, double t, int n_particles) {
  double e = 0.0;
  for (int k = 1; k <= n_particles / 2; ++k) e += 2 * (-2 * t * std::cos(k * M_PI / (sites + 1)));
  return e;
}

inline IntegralSet random_integrals(int norb, int n_electrons, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.5);
  IntegralSet ints(norb, n_electrons, 0);
  ints.core_energy = normal(rng);
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q <= p; ++q) ints.set_h(p, q, normal(rng));
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q < norb; ++q)
      for (int r = 0; r < norb; ++r)
        for (int s = 0; s < norb; ++s) ints.set_v(p, q, r, s, 0.0);
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r < norb; ++r)
        for (int s = 0; s <= r; ++s)
          if (p * (p + 1) / 2 + q >= r * (r + 1) / 2 + s) ints.set_v(p, q, r, s, normal(rng));
  return ints;
}

inline std::string data_path(const std::string& name) {
  return std::string(RDMCONE_DATA_DIR) + "/" + name;
}

}  // namespace rdmcone::testing
