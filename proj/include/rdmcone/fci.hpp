#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rdmcone/error.hpp"
#include "rdmcone/integrals.hpp"
#include "rdmcone/nrep_maps.hpp"
#include "rdmcone/pair_space.hpp"

namespace rdmcone {

using Determinant = std::uint64_t;

struct FermionOp {
  enum Kind { Create, Annihilate } kind;
  int orbital;

  static FermionOp create(int p) { return {Create, p}; }
  static FermionOp annihilate(int p) { return {Annihilate, p}; }
};

/// Result of acting with an operator string; phase 0 means the state was
/// annihilated.
struct OperatorResult {
  Determinant mask = 0;
  int phase = 0;

  bool zero() const noexcept { return phase == 0; }
};

/// Applies `ops` to |mask> as the written operator product, i.e. the last
/// operator acts first. Orbital p picks up (-1)^(occupied orbitals below p).
inline OperatorResult apply_operator_string(Determinant mask, std::span<const FermionOp> ops) {
  int phase = 1;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const Determinant bit = Determinant{1} << it->orbital;
    const bool occupied = mask & bit;
    if ((it->kind == FermionOp::Create) == occupied) return {mask, 0};
    if (std::popcount(mask & (bit - 1)) & 1) phase = -phase;
    mask ^= bit;
  }
  return {mask, phase};
}

inline OperatorResult apply_operator_string(Determinant mask,
                                            std::initializer_list<FermionOp> ops) {
  return apply_operator_string(mask, std::span<const FermionOp>(ops.begin(), ops.size()));
}

/// N-electron determinants over r spin orbitals (interleaved alpha/beta) in a
/// fixed 2*S_z sector, strictly increasing bitmask order.
class DeterminantBasis {
 public:
  DeterminantBasis(int rank, int n_particles, int ms2) : rank_(rank), n_(n_particles), ms2_(ms2) {
    if (rank < 1 || rank > 62) throw Error("determinant basis supports 1..62 spin orbitals");
    if (n_particles < 0 || n_particles > rank) throw Error("particle count out of range");
    const double count = binomial(rank, n_particles);
    if (count > 1e6) throw Error("FCI basis too large: binomial(r, N) exceeds the 1e6 guard");
    Determinant full = (Determinant{1} << rank) - 1;
    if (n_particles == 0) {
      if (ms2 == 0) dets_.push_back(0);
    } else {
      Determinant d = (Determinant{1} << n_particles) - 1;
      while (d <= full) {
        if (ms2_of(d) == ms2) dets_.push_back(d);
        // next combination with the same popcount (Gosper's hack)
        const Determinant c = d & (~d + 1);
        const Determinant s = d + c;
        d = (((s ^ d) >> 2) / c) | s;
      }
    }
    if (dets_.empty()) throw Error("empty FCI sector for the requested N and MS2");
  }

  static double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
  }

  static int ms2_of(Determinant d) {
    constexpr Determinant alpha_bits = 0x5555555555555555ULL;
    return std::popcount(d & alpha_bits) - std::popcount(d & ~alpha_bits);
  }

  int rank() const noexcept { return rank_; }
  int n_particles() const noexcept { return n_; }
  int ms2() const noexcept { return ms2_; }
  std::size_t size() const noexcept { return dets_.size(); }
  Determinant operator[](std::size_t i) const { return dets_[i]; }
  const std::vector<Determinant>& determinants() const noexcept { return dets_; }

  /// Position of `d`, or -1 when it lies outside this sector.
  long index_of(Determinant d) const {
    auto it = std::lower_bound(dets_.begin(), dets_.end(), d);
    if (it == dets_.end() || *it != d) return -1;
    return static_cast<long>(it - dets_.begin());
  }

 private:
  int rank_;
  int n_;
  int ms2_;
  std::vector<Determinant> dets_;
};

struct FCIOptions {
  std::size_t dense_limit = 2000;
  std::uint64_t seed = 20201013;
  double tolerance = 1e-11;
  int max_krylov = 80;
  int max_restarts = 200;
};

struct FCIResult {
  double energy = 0.0;
  Vector ground_vector;
  int ms2 = 0;
  std::size_t dimension = 0;
  bool degenerate = false;
  double gap = 0.0;
  double residual = 0.0;
  TwoRDM rdm2;
  OneRDM rdm1;
};

namespace detail {

/// Calls visit(row, value) for every nonzero <row|H|col>.
template <class Visit>
void hamiltonian_column(const DeterminantBasis& basis, const Matrix& h, const PackedMatrix& v,
                        std::size_t col, Visit&& visit) {
  const int r = basis.rank();
  const Determinant d = basis[col];
  double diag = 0.0;
  for (int q = 0; q < r; ++q) {
    if (!(d >> q & 1)) continue;
    diag += h(q, q);
    for (int p = 0; p < r; ++p) {
      if (p == q || h(p, q) == 0.0 || (d >> p & 1)) continue;
      const auto res = apply_operator_string(d, {FermionOp::create(p), FermionOp::annihilate(q)});
      const long row = basis.index_of(res.mask);
      if (row >= 0) visit(static_cast<std::size_t>(row), res.phase * h(p, q));
    }
  }
  const PairBasis& pb = v.basis();
  for (int s = 0; s < r; ++s) {
    if (!(d >> s & 1)) continue;
    for (int t = s + 1; t < r; ++t) {
      if (!(d >> t & 1)) continue;
      const int col_pair = pb.ordered_index(s, t);
      const auto mid = apply_operator_string(d, {FermionOp::annihilate(t), FermionOp::annihilate(s)});
      for (int p = 0; p < r; ++p) {
        if (mid.mask >> p & 1) continue;
        for (int q = p + 1; q < r; ++q) {
          if (mid.mask >> q & 1) continue;
          const double val = v(pb.ordered_index(p, q), col_pair);
          if (val == 0.0) continue;
          const auto res =
              apply_operator_string(mid.mask, {FermionOp::create(p), FermionOp::create(q)});
          if (res.mask == d) {
            diag += mid.phase * res.phase * val;
            continue;
          }
          const long row = basis.index_of(res.mask);
          if (row >= 0) visit(static_cast<std::size_t>(row), mid.phase * res.phase * val);
        }
      }
    }
  }
  visit(col, diag);
}

struct LanczosResult {
  double value;
  double second;
  Vector vector;
  double residual;
};

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
inline LanczosResult lanczos_lowest(const Eigen::SparseMatrix<double>& h, const FCIOptions& opt) {
  const Eigen::Index n = h.rows();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uni(rng);
  v.normalize();
  LanczosResult out{0.0, 0.0, v, 1.0};
  const double scale = std::max(1.0, Matrix(h.cwiseAbs() * Vector::Ones(n)).maxCoeff());
  for (int restart = 0; restart < opt.max_restarts; ++restart) {
    const int m = static_cast<int>(std::min<Eigen::Index>(opt.max_krylov, n));
    Matrix q(n, m);
    Matrix t = Matrix::Zero(m, m);
    q.col(0) = v;
    int k = 0;
    for (; k < m; ++k) {
      Vector w = h * q.col(k);
      for (int it = 0; it < 2; ++it) w -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * w);
      t(k, k) = q.col(k).dot(h * q.col(k));
      if (k + 1 == m) break;
      const double beta = w.norm();
      if (beta < 1e-14 * scale) break;
      t(k, k + 1) = t(k + 1, k) = beta;
      q.col(k + 1) = w / beta;
    }
    const int used = k + 1;
    Eigen::SelfAdjointEigenSolver<Matrix> small(t.topLeftCorner(used, used));
    v = q.leftCols(used) * small.eigenvectors().col(0);
    v.normalize();
    out.value = small.eigenvalues()(0);
    out.second = used > 1 ? small.eigenvalues()(1) : out.value;
    out.vector = v;
    out.residual = (h * v - out.value * v).norm();
    if (out.residual <= opt.tolerance * scale) break;
  }
  return out;
}

}  // namespace detail

/// Exact 1-RDM <a_p^+ a_q> of a state expanded in `basis`.
inline Matrix one_rdm_of(const DeterminantBasis& basis, const Vector& psi) {
  const int r = basis.rank();
  Matrix gamma = Matrix::Zero(r, r);
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const double cj = psi(static_cast<Eigen::Index>(col));
    if (cj == 0.0) continue;
    const Determinant d = basis[col];
    for (int q = 0; q < r; ++q) {
      if (!(d >> q & 1)) continue;
      for (int p = 0; p < r; ++p) {
        const auto res = apply_operator_string(d, {FermionOp::create(p), FermionOp::annihilate(q)});
        if (res.zero()) continue;
        const long row = basis.index_of(res.mask);
        if (row >= 0) gamma(p, q) += psi(row) * cj * res.phase;
      }
    }
  }
  return gamma;
}

/// Exact packed 2-RDM <a_p^+ a_q^+ a_t a_s> (p<q, s<t) of a state in `basis`.
inline PackedMatrix two_rdm_of(const DeterminantBasis& basis, const Vector& psi) {
  const int r = basis.rank();
  const PairBasis pb(r);
  PackedMatrix d2(pb);
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const double cj = psi(static_cast<Eigen::Index>(col));
    if (cj == 0.0) continue;
    const Determinant d = basis[col];
    for (int s = 0; s < r; ++s) {
      if (!(d >> s & 1)) continue;
      for (int t = s + 1; t < r; ++t) {
        if (!(d >> t & 1)) continue;
        const auto mid =
            apply_operator_string(d, {FermionOp::annihilate(t), FermionOp::annihilate(s)});
        const int col_pair = pb.ordered_index(s, t);
        for (int p = 0; p < r; ++p) {
          if (mid.mask >> p & 1) continue;
          for (int q = p + 1; q < r; ++q) {
            if (mid.mask >> q & 1) continue;
            const auto res =
                apply_operator_string(mid.mask, {FermionOp::create(p), FermionOp::create(q)});
            const long row = basis.index_of(res.mask);
            if (row >= 0) d2(pb.ordered_index(p, q), col_pair) += psi(row) * cj * mid.phase * res.phase;
          }
        }
      }
    }
  }
  return d2;
}

/// Dense matrix of H in the determinant basis (for small sectors and tests).
inline Matrix fci_hamiltonian_matrix(const IntegralSet& ints, const DeterminantBasis& basis) {
  const Matrix h = spin_orbital_one_body(ints);
  const PackedMatrix v = two_body_operator(ints);
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix hm = Matrix::Zero(n, n);
  for (std::size_t col = 0; col < basis.size(); ++col)
    detail::hamiltonian_column(basis, h, v, col, [&](std::size_t row, double val) {
      hm(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += val;
    });
  hm.diagonal().array() += ints.core_energy;
  return hm;
}

/// Lowest eigenstate of the interacting Hamiltonian in the (N, 2 S_z = ms2)
/// sector with its exact reduced density matrices.
inline FCIResult fci_ground_state(const IntegralSet& ints, int n_particles, int ms2,
                                  const FCIOptions& opt = {}) {
  const int r = ints.spin_orbitals();
  if (n_particles < 1) throw Error("FCI needs at least one particle");
  const DeterminantBasis basis(r, n_particles, ms2);
  const auto n = static_cast<Eigen::Index>(basis.size());
  FCIResult out;
  out.ms2 = ms2;
  out.dimension = basis.size();

  if (basis.size() <= opt.dense_limit) {
    const Matrix hm = fci_hamiltonian_matrix(ints, basis);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hm);
    out.energy = solver.eigenvalues()(0);
    out.ground_vector = solver.eigenvectors().col(0);
    out.gap = n > 1 ? solver.eigenvalues()(1) - out.energy : INFINITY;
    out.residual = (hm * out.ground_vector - out.energy * out.ground_vector).norm();
  } else {
    const Matrix h = spin_orbital_one_body(ints);
    const PackedMatrix v = two_body_operator(ints);
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t col = 0; col < basis.size(); ++col)
      detail::hamiltonian_column(basis, h, v, col, [&](std::size_t row, double val) {
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), val);
      });
    Eigen::SparseMatrix<double> hs(n, n);
    hs.setFromTriplets(triplets.begin(), triplets.end());
    const auto lz = detail::lanczos_lowest(hs, opt);
    out.energy = lz.value + ints.core_energy;
    out.ground_vector = lz.vector;
    out.gap = lz.second - lz.value;
    out.residual = lz.residual;
  }
  // Deterministic overall sign: largest-magnitude coefficient positive.
  Eigen::Index imax = 0;
  out.ground_vector.cwiseAbs().maxCoeff(&imax);
  if (out.ground_vector(imax) < 0) out.ground_vector = -out.ground_vector;
  out.degenerate = out.gap < 1e-8;

  Matrix gamma = one_rdm_of(basis, out.ground_vector);
  symmetrize(gamma);
  out.rdm1 = {std::move(gamma), n_particles};
  PackedMatrix d2 = n_particles >= 2 ? two_rdm_of(basis, out.ground_vector) : PackedMatrix(PairBasis(r));
  d2.symmetrize();
  out.rdm2 = {std::move(d2), n_particles};
  return out;
}

/// Lowest state over all S_z sectors (ms2 >= 0 suffices by spin-flip symmetry).
inline FCIResult fci_lowest(const IntegralSet& ints, int n_particles, const FCIOptions& opt = {}) {
  const int r = ints.spin_orbitals();
  const int norb = r / 2;
  FCIResult best;
  bool have = false;
  for (int ms2 = n_particles % 2; ms2 <= n_particles; ms2 += 2) {
    const int na = (n_particles + ms2) / 2;
    if (na > norb) continue;
    FCIResult res = fci_ground_state(ints, n_particles, ms2, opt);
    if (!have || res.energy < best.energy - 1e-12) {
      best = std::move(res);
      have = true;
    }
  }
  if (!have) throw Error("no valid S_z sector");
  return best;
}

}  // namespace rdmcone
