#pragma once

#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/fock_space.hpp"
#include "report.hpp"

namespace rdmcone::cli {

struct VerifyOptions {
  /// Empty runs everything.
  std::vector<std::string> only;
  /// "lift-q2-sign" flips the gamma terms of the Q2 lift.
  std::string inject_fault;
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

using testing::FockSpace;

inline PackedMatrix packed_from_full(const Matrix& full, const PairBasis& b) {
  PackedMatrix out(b);
  for (int a = 0; a < b.dim(); ++a)
    for (int c = 0; c < b.dim(); ++c) {
      const auto [i, j] = b.pair_of(a);
      const auto [k, l] = b.pair_of(c);
      out(a, c) = full(i * b.rank() + j, k * b.rank() + l);
    }
  return out;
}

inline Matrix t2_operator(const FockSpace& fock, const T2FactorCoefficients& c) {
  const int r = fock.rank();
  Matrix op = Matrix::Zero(fock.dim(), fock.dim());
  for (int j = 0; j < r; ++j)
    for (int k = j + 1; k < r; ++k)
      for (int l = 0; l < r; ++l) {
        const double v = c.c(c.basis.ordered_index(j, k), l);
        if (v != 0.0) op += v * fock.adag(j) * fock.adag(k) * fock.a(l);
      }
  return op * op.transpose() + op.transpose() * op;
}

struct BundledSystem {
  std::string label;
  IntegralSet ints;
  int n = 0;
};

inline std::vector<BundledSystem> bounded_suite() {
  std::vector<BundledSystem> out;
  for (int l : {2, 4})
    for (double u : {0.0, 2.0, 4.0, 8.0}) {
      std::ostringstream name;
      name << "hubbard_L" << l << "_U" << u;
      out.push_back({name.str(), hubbard_chain(l, 1.0, u), l});
    }
  for (const char* f : {"h2_sto3g", "h4_sto3g_r1.0", "h4_sto3g_r2.0"}) {
    auto ints = parse_fcidump_file(std::string(RDMCONE_DATA_DIR) + "/" + f + ".fcidump");
    const int n = ints.n_electrons;
    out.push_back({f, std::move(ints), n});
  }
  return out;
}

inline CheckResult oracle_equivalence(const VerifyOptions& opt) {
  const double sign = opt.inject_fault == "lift-q2-sign" ? -1.0 : 1.0;
  std::mt19937_64 rng(opt.seed + 101);
  double worst = 0.0;
  const int r = 6;
  const FockSpace fock(r);
  const PairBasis b(r);
  for (int n = 2; n <= 3; ++n)
    for (int trial = 0; trial < 4; ++trial) {
      const auto psi = fock.random_state(n, rng);
      const TwoRDM d{packed_from_full(fock.two_rdm_full(psi), b), n};
      const PackedMatrix q = rdmcone::detail::lift_q2(d, sign);
      const Matrix g = lift_G2(d);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          const Matrix left_g = fock.adag(i) * fock.a(j);
          const Matrix left_q = fock.a(i) * fock.a(j);
          for (int k = 0; k < r; ++k)
            for (int l = 0; l < r; ++l) {
              const double go = fock.expectation(left_g * fock.adag(l) * fock.a(k), psi);
              worst = std::max(worst, std::abs(g(i * r + j, k * r + l) - go));
              if (i < j && k < l) {
                const double qo = fock.expectation(left_q * fock.adag(l) * fock.adag(k), psi);
                worst = std::max(
                    worst, std::abs(q(b.ordered_index(i, j), b.ordered_index(k, l)) - qo));
              }
            }
        }
      const auto c = T2FactorCoefficients::random(b, rng);
      const double t = hermitian_inner_product(t2_dual_element(c, n).B, d.D);
      worst = std::max(worst, std::abs(t - fock.expectation(t2_operator(fock, c), psi)));
    }
  std::ostringstream s;
  s << "max |map - Fock-space oracle| = " << worst << " over Q2, G2 and T2 at r=6, N=2,3";
  return {"oracle-equivalence", worst <= 1e-10, s.str()};
}

inline CheckResult positivity(const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.seed + 202);
  double worst = 0.0;
  int states = 0;
  for (int l : {2, 4})
    for (double u : {0.0, 4.0, 8.0}) {
      const auto fci = fci_ground_state(hubbard_chain(l, 1.0, u), l, 0);
      if (fci.degenerate) continue;
      ++states;
      worst = std::min(worst, min_eigenvalue(fci.rdm2.D.matrix()));
      worst = std::min(worst, min_eigenvalue(lift_Q2(fci.rdm2).matrix()));
      worst = std::min(worst, min_eigenvalue(lift_G2(fci.rdm2)));
      for (int k = 0; k < 100; ++k) {
        const auto c = T2FactorCoefficients::random(fci.rdm2.basis(), rng);
        worst = std::min(worst, hermitian_inner_product(t2_dual_element(c, l).B, fci.rdm2.D));
      }
    }
  std::ostringstream s;
  s << "lowest D2/Q2/G2 eigenvalue or T2 expectation over " << states << " FCI states: " << worst;
  return {"positivity", worst >= -1e-10, s.str()};
}

inline CheckResult lower_bound_safety(const VerifyOptions& opt) {
  std::ostringstream s;
  bool pass = true;
  double margin = -std::numeric_limits<double>::infinity();
  for (const auto& sys : bounded_suite()) {
    const double fci = fci_lowest(sys.ints, sys.n).energy;
    const auto k = assemble_reduced_hamiltonian(sys.ints, sys.n);
    PrimalProblem pp{k};
    pp.max_iterations = 4000;
    const auto primal = solve_primal(pp);
    DualProblem dp{k};
    dp.n_t2_factors = 0;
    dp.seed = opt.seed;
    dp.max_outer_iterations = 30;
    const auto dual = solve_dual(dp);
    double worst = std::max(primal.energy - primal.residual_gap, primal.rigorous_bound);
    for (const auto* rep : {&primal, &dual.report})
      for (const auto& h : rep->history) worst = std::max(worst, h.bound);
    worst = std::max(worst, dual.report.rigorous_bound);
    margin = std::max(margin, worst - fci);
    if (worst > fci + 1e-9) {
      pass = false;
      s << sys.label << " bound exceeds FCI by " << worst - fci << "; ";
    }
  }
  s << "largest (bound - E_FCI) over primal and dual iterations: " << margin;
  return {"lower-bound-safety", pass, s.str()};
}

inline CheckResult two_electron_exactness(const VerifyOptions& opt) {
  const auto ints = hubbard_chain(2, 1.0, 4.0);
  const auto fci = fci_lowest(ints, 2);
  const auto k = assemble_reduced_hamiltonian(ints, 2);
  const auto primal = solve_primal(PrimalProblem{k});
  DualProblem dp{k};
  dp.tolerance = 1e-8;
  dp.seed = opt.seed;
  const auto dual = solve_dual(dp);
  const double x_err = (dual.multiplier.X.matrix() - fci.rdm2.D.matrix()).norm();
  const double e_err =
      std::max(std::abs(primal.energy - fci.energy), std::abs(dual.report.energy - fci.energy));
  std::ostringstream s;
  s << "Hubbard dimer: max |E - E_FCI| = " << e_err << ", |X - D_FCI|_F = " << x_err;
  return {"two-electron-exactness", e_err <= 1e-5 && x_err <= 1e-3, s.str()};
}

inline CheckResult hellmann_feynman(const VerifyOptions& opt) {
  DualProblem p{assemble_reduced_hamiltonian(hubbard_chain(4, 1.0, 4.0), 4)};
  p.n_t2_factors = 0;
  p.tolerance = 1e-7;
  p.seed = opt.seed;
  const auto base = solve_dual(p);
  std::mt19937_64 rng(opt.seed + 303);
  std::normal_distribution<double> normal;
  const int m = p.K.basis().dim();
  std::vector<PackedMatrix> dirs;
  for (int d = 0; d < 3; ++d) {
    Matrix a(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = normal(rng);
    dirs.emplace_back(p.K.basis(), a / a.norm());
  }
  const auto out = hellmann_feynman_check(p, base, dirs, 1e-4);
  double worst = 0.0;
  for (const auto& e : out) worst = std::max(worst, e.discrepancy);
  std::ostringstream s;
  s << "Hubbard L=4 U=4 DQG, 3 directions, step 1e-4: max |dE/dt - Tr(Delta X)| = " << worst;
  return {"hellmann-feynman", base.report.converged && worst <= 1e-4, s.str()};
}

}  // namespace detail

inline std::vector<std::string> verify_check_names() {
  return {"oracle-equivalence", "positivity", "two-electron-exactness", "hellmann-feynman",
          "lower-bound-safety"};
}

inline std::vector<CheckResult> run_verify(const VerifyOptions& opt) {
  using Fn = std::function<CheckResult(const VerifyOptions&)>;
  const std::vector<std::pair<std::string, Fn>> checks{
      {"oracle-equivalence", detail::oracle_equivalence},
      {"positivity", detail::positivity},
      {"two-electron-exactness", detail::two_electron_exactness},
      {"hellmann-feynman", detail::hellmann_feynman},
      {"lower-bound-safety", detail::lower_bound_safety},
  };
  for (const auto& name : opt.only) {
    bool known = false;
    for (const auto& c : checks) known = known || c.first == name;
    if (!known) throw Error("unknown verify check '" + name + "'");
  }
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : checks) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), name) == opt.only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fn(opt);
    } catch (const std::exception& e) {
      r = {name, false, std::string("error: ") + e.what()};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rdmcone::cli
