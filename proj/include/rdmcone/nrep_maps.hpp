#pragma once

#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rdmcone/error.hpp"
#include "rdmcone/pair_space.hpp"

namespace rdmcone {

/// Packed 2-RDM: D[(ij),(kl)] = <a_i^+ a_j^+ a_l a_k> for i<j, k<l.
struct TwoRDM {
  PackedMatrix D;
  int n_particles = 0;

  const PairBasis& basis() const noexcept { return D.basis(); }
  double pair_count() const noexcept { return 0.5 * n_particles * (n_particles - 1); }
  double trace_error() const { return D.trace() - pair_count(); }
};

/// Spin-orbital 1-RDM gamma[i][k] = <a_i^+ a_k>.
struct OneRDM {
  Matrix gamma;
  int n_particles = 0;
};

enum class Condition { D2, Q2, G2, T2 };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::D2: return "D2";
    case Condition::Q2: return "Q2";
    case Condition::G2: return "G2";
    case Condition::T2: return "T2";
  }
  return "?";
}

/// A matrix B with Tr(B D) >= 0 for every N-representable D. `factor` is the
/// generating PSD matrix (D2/Q2/G2) or the coefficient matrix (T2).
struct DualConeElement {
  PackedMatrix B;
  Condition condition = Condition::D2;
  Matrix factor;
};

// ---------------------------------------------------------------------------
// Contraction

/// Linear contraction gamma_ik = 1/(N-1) sum_j D^{ij}_{kj} on the full tensor.
inline Matrix contract_full(const Matrix& full, int rank, int n_particles) {
  Matrix gamma = Matrix::Zero(rank, rank);
  for (int i = 0; i < rank; ++i)
    for (int k = 0; k < rank; ++k) {
      double sum = 0.0;
      for (int j = 0; j < rank; ++j) sum += full(i * rank + j, k * rank + j);
      gamma(i, k) = sum / (n_particles - 1);
    }
  return gamma;
}

/// Adjoint of contract_full: returns T with <T, full> = <Y, gamma(full)>.
inline void add_contraction_adjoint(const Matrix& y, int rank, int n_particles, Matrix& full) {
  const double scale = 1.0 / (n_particles - 1);
  for (int i = 0; i < rank; ++i)
    for (int k = 0; k < rank; ++k) {
      const double v = y(i, k) * scale;
      if (v == 0.0) continue;
      for (int j = 0; j < rank; ++j) full(i * rank + j, k * rank + j) += v;
    }
}

inline OneRDM contract_to_1rdm(const TwoRDM& d) {
  if (d.n_particles < 2) throw Error("contraction to the 1-RDM needs N >= 2");
  if (std::abs(d.trace_error()) > 1e-3) throw Error("non-normalized 2-RDM");
  const int r = d.basis().rank();
  Matrix gamma = contract_full(unpack_full(d.D), r, d.n_particles);
  symmetrize(gamma);
  return {std::move(gamma), d.n_particles};
}

// ---------------------------------------------------------------------------
// Q2: two-hole RDM  Q[(ij),(kl)] = <a_i a_j a_l^+ a_k^+>
//   = d_ik d_jl - d_il d_jk - d_jl g_ik + d_jk g_il + d_il g_jk - d_ik g_jl + D[(kl),(ij)]

namespace detail {

/// Gamma-dependent part of Q2, optionally with the gamma terms' sign flipped
/// (used only as a mutation fixture for the verification suite).
inline PackedMatrix q2_gamma_terms(const Matrix& gamma, const PairBasis& basis, double sign = 1.0) {
  const int r = basis.rank();
  PackedMatrix out(basis);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const int a = basis.ordered_index(i, j);
      for (int k = 0; k < r; ++k)
        for (int l = k + 1; l < r; ++l) {
          double v = 0.0;
          if (j == l) v -= gamma(i, k);
          if (j == k) v += gamma(i, l);
          if (i == l) v += gamma(j, k);
          if (i == k) v -= gamma(j, l);
          if (v != 0.0) out(a, basis.ordered_index(k, l)) = sign * v;
        }
    }
  return out;
}

inline Matrix q2_gamma_terms_adjoint(const PackedMatrix& x) {
  const PairBasis& basis = x.basis();
  const int r = basis.rank();
  Matrix y = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const int a = basis.ordered_index(i, j);
      for (int k = 0; k < r; ++k)
        for (int l = k + 1; l < r; ++l) {
          const double v = x(a, basis.ordered_index(k, l));
          if (j == l) y(i, k) -= v;
          if (j == k) y(i, l) += v;
          if (i == l) y(j, k) += v;
          if (i == k) y(j, l) -= v;
        }
    }
  return y;
}

inline PackedMatrix lift_q2(const TwoRDM& d, double gamma_sign) {
  const int r = d.basis().rank();
  Matrix gamma = d.n_particles >= 2 ? contract_full(unpack_full(d.D), r, d.n_particles)
                                    : Matrix::Zero(r, r);
  PackedMatrix q = q2_gamma_terms(gamma, d.basis(), gamma_sign);
  q.matrix() += Matrix::Identity(d.D.dim(), d.D.dim()) + d.D.matrix().transpose();
  q.symmetrize();
  return q;
}

}  // namespace detail

inline PackedMatrix lift_Q2(const TwoRDM& d) { return detail::lift_q2(d, 1.0); }

/// Linear part of Q2 (everything except the identity term).
inline PackedMatrix q2_linear(const PackedMatrix& d, int n_particles) {
  const int r = d.basis().rank();
  PackedMatrix q =
      detail::q2_gamma_terms(contract_full(unpack_full(d), r, n_particles), d.basis());
  q.matrix() += d.matrix().transpose();
  return q;
}

inline PackedMatrix q2_linear_adjoint(const PackedMatrix& x, int n_particles) {
  const PairBasis& basis = x.basis();
  const int r = basis.rank();
  Matrix full = Matrix::Zero(r * r, r * r);
  add_contraction_adjoint(detail::q2_gamma_terms_adjoint(x), r, n_particles, full);
  PackedMatrix out = pack_adjoint(full, basis);
  out.matrix() += x.matrix().transpose();
  return out;
}

/// Q2 with the identity term written as (Tr D / (N(N-1)/2)) I, so that the
/// map is linear on the trace-normalized set.
inline PackedMatrix q2_homogeneous(const PackedMatrix& d, int n_particles) {
  const double c = 0.5 * n_particles * (n_particles - 1);
  PackedMatrix q = q2_linear(d, n_particles);
  q.matrix().diagonal().array() += d.trace() / c;
  return q;
}

inline PackedMatrix q2_homogeneous_adjoint(const PackedMatrix& x, int n_particles) {
  const double c = 0.5 * n_particles * (n_particles - 1);
  PackedMatrix out = q2_linear_adjoint(x, n_particles);
  out.matrix().diagonal().array() += x.trace() / c;
  return out;
}

// ---------------------------------------------------------------------------
// G2: particle-hole RDM over ordered pairs (compound index i*r+j)
//   G[(ij),(kl)] = d_jl g_ik - <a_i^+ a_l^+ a_j a_k>

inline Matrix g2_map(const PackedMatrix& d, int n_particles) {
  const int r = d.basis().rank();
  const Matrix full = unpack_full(d);
  const Matrix gamma = contract_full(full, r, n_particles);
  Matrix g(r * r, r * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l)
          g(i * r + j, k * r + l) = (j == l ? gamma(i, k) : 0.0) - full(i * r + l, k * r + j);
  return g;
}

inline PackedMatrix g2_adjoint(const Matrix& x, const PairBasis& basis, int n_particles) {
  const int r = basis.rank();
  Matrix full = Matrix::Zero(r * r, r * r);
  Matrix y = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        for (int l = 0; l < r; ++l) {
          const double v = x(i * r + j, k * r + l);
          full(i * r + l, k * r + j) -= v;
          if (j == l) y(i, k) += v;
        }
  add_contraction_adjoint(y, r, n_particles, full);
  return pack_adjoint(full, basis);
}

inline Matrix lift_G2(const TwoRDM& d) {
  if (d.n_particles < 2) {
    const int r = d.basis().rank();
    return Matrix::Zero(r * r, r * r);
  }
  Matrix g = g2_map(d.D, d.n_particles);
  symmetrize(g);
  return g;
}

// ---------------------------------------------------------------------------
// T2 dual-cone elements. C = sum_{j<k,l} c_{jkl} a_j^+ a_k^+ a_l and
// Tr(B(c) D) = <C C^+ + C^+ C>.

/// Coefficients c[(j<k), l]: rows follow the PairBasis, columns the
/// annihilated orbital. Antisymmetry in (j,k) is implied by the packing.
struct T2FactorCoefficients {
  PairBasis basis;
  Matrix c;

  explicit T2FactorCoefficients(PairBasis b)
      : basis(b), c(Matrix::Zero(b.dim(), b.rank())) {}
  T2FactorCoefficients(PairBasis b, Matrix coefficients) : basis(b), c(std::move(coefficients)) {
    if (c.rows() != basis.dim() || c.cols() != basis.rank())
      throw Error("T2 coefficient matrix must be (pair dim) x (rank)");
  }

  /// Frobenius norm of the full antisymmetric tensor scaled to one.
  T2FactorCoefficients normalized() const {
    const double n = c.norm();
    if (n == 0.0) throw Error("cannot normalize zero T2 coefficients");
    return {basis, c / n};
  }

  template <class Rng>
  static T2FactorCoefficients random(PairBasis b, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix c(b.dim(), b.rank());
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = normal(rng);
    return T2FactorCoefficients(b, std::move(c)).normalized();
  }
};

namespace detail {

/// Full tensor c_{jkl} as an r^2 x r matrix, row j*r+k.
inline Matrix t2_full_coefficients(const Matrix& packed, const PairBasis& basis) {
  const int r = basis.rank();
  Matrix full = Matrix::Zero(r * r, r);
  for (int j = 0; j < r; ++j)
    for (int k = j + 1; k < r; ++k) {
      const int a = basis.ordered_index(j, k);
      full.row(j * r + k) = packed.row(a);
      full.row(k * r + j) = -packed.row(a);
    }
  return full;
}

/// F[(x,y), j] = c_{j y x}
inline Matrix t2_exchange_layout(const Matrix& full, int r) {
  Matrix f(r * r, r);
  for (int j = 0; j < r; ++j)
    for (int y = 0; y < r; ++y)
      for (int x = 0; x < r; ++x) f(x * r + y, j) = full(j * r + y, x);
  return f;
}

}  // namespace detail

/// Accumulates the (unsymmetrized) full-tensor weight W with
/// sum_{pqrs} W[(pq),(rs)] <a_p^+ a_q^+ a_s a_r> = <C C^+ + C^+ C> for
/// C = sum_{jkl} c_jkl a_j^+ a_k^+ a_l (all j,k):
///   W = sum_l c_pql c_rsl - 4 sum_j c_jsp c_jqr + 2/(N-1) d_qs sum_jk c_jkp c_jkr.
/// The packed T2 dual element is the 1/4-scaled antisymmetrization of this
/// weight.
inline void accumulate_t2_weight(const Matrix& full_c, int rank, int n_particles, Matrix& w) {
  const int r = rank;
  w.noalias() += full_c * full_c.transpose();
  const Matrix f = detail::t2_exchange_layout(full_c, r);
  const Matrix p = f * f.transpose();
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c)
        for (int d = 0; d < r; ++d) w(a * r + b, c * r + d) -= 4.0 * p(a * r + d, c * r + b);
  const Matrix m = full_c.transpose() * full_c;
  const double scale = 2.0 / (n_particles - 1);
  for (int a = 0; a < r; ++a)
    for (int c = 0; c < r; ++c) {
      const double v = scale * m(a, c);
      for (int q = 0; q < r; ++q) w(a * r + q, c * r + q) += v;
    }
}

inline PackedMatrix t2_element_matrix(const Matrix& packed_c, const PairBasis& basis,
                                      int n_particles) {
  if (n_particles < 2) throw Error("T2 dual element needs N >= 2");
  const int r = basis.rank();
  Matrix w = Matrix::Zero(r * r, r * r);
  accumulate_t2_weight(detail::t2_full_coefficients(packed_c, basis), r, n_particles, w);
  // full_c double-counts each creator pair, so w describes 2C.
  PackedMatrix b = pack_adjoint(w, basis);
  b *= 0.25;
  b.symmetrize();
  return b;
}

inline DualConeElement t2_dual_element(const T2FactorCoefficients& c, int n_particles) {
  return {t2_element_matrix(c.c, c.basis, n_particles), Condition::T2, c.c};
}

/// Gradient of <W, B(c)> with respect to the packed coefficients, where
/// `w_full` = unpack_full(W) (an r^2 x r^2 antisymmetric tensor).
inline Matrix t2_gradient(const Matrix& w_full, const Matrix& packed_c, const PairBasis& basis,
                          int n_particles) {
  const int r = basis.rank();
  const Matrix full_c = detail::t2_full_coefficients(packed_c, basis);
  Matrix g = 2.0 * (w_full * full_c);

  Matrix w_exchange(r * r, r * r);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      for (int s = 0; s < r; ++s)
        for (int t = 0; t < r; ++t) w_exchange(p * r + t, s * r + q) = w_full(p * r + q, s * r + t);
  const Matrix gf = -8.0 * (w_exchange * detail::t2_exchange_layout(full_c, r));
  for (int j = 0; j < r; ++j)
    for (int y = 0; y < r; ++y)
      for (int x = 0; x < r; ++x) g(j * r + y, x) += gf(x * r + y, j);

  Matrix omega = Matrix::Zero(r, r);
  for (int p = 0; p < r; ++p)
    for (int s = 0; s < r; ++s)
      for (int q = 0; q < r; ++q) omega(p, s) += w_full(p * r + q, s * r + q);
  g.noalias() += (4.0 / (n_particles - 1)) * full_c * omega;

  Matrix packed(basis.dim(), r);
  for (int j = 0; j < r; ++j)
    for (int k = j + 1; k < r; ++k)
      packed.row(basis.ordered_index(j, k)) = 0.25 * (g.row(j * r + k) - g.row(k * r + j));
  return packed;
}

// ---------------------------------------------------------------------------
// D2 / Q2 / G2 dual-cone elements from PSD factors

namespace detail {

inline void require_psd(const Matrix& factor, const char* what) {
  if (factor.rows() != factor.cols()) throw Error(std::string(what) + " factor is not square");
  if (asymmetry(factor) > 1e-10 * std::max(1.0, factor.cwiseAbs().maxCoeff()))
    throw Error(std::string(what) + " factor is not symmetric");
  const double floor = -1e-10 * std::max(1.0, factor.cwiseAbs().maxCoeff());
  if (min_eigenvalue(factor) < floor)
    throw Error(std::string(what) + " factor is not positive semidefinite");
}

}  // namespace detail

/// Pulls a PSD matrix in the lifted space of `condition` back to pair space.
/// D2: B = P. Q2: B = Q2^+(P), with the constant term carried by the trace
/// normalization. G2: B = G2^+(P), P over the r^2 ordered-pair space.
inline DualConeElement pullback_dual_element(Condition condition, const Matrix& psd,
                                             const PairBasis& basis, int n_particles) {
  if (n_particles < 2) throw Error("dual elements need N >= 2");
  detail::require_psd(psd, to_string(condition).data());
  switch (condition) {
    case Condition::D2:
      return {PackedMatrix(basis, psd), condition, psd};
    case Condition::Q2: {
      PackedMatrix b = q2_homogeneous_adjoint(PackedMatrix(basis, psd), n_particles);
      b.symmetrize();
      return {std::move(b), condition, psd};
    }
    case Condition::G2: {
      const int r2 = basis.rank() * basis.rank();
      if (psd.rows() != r2) throw Error("G2 factor must live on the r^2 ordered-pair space");
      PackedMatrix b = g2_adjoint(psd, basis, n_particles);
      b.symmetrize();
      return {std::move(b), condition, psd};
    }
    case Condition::T2:
      break;
  }
  throw Error("T2 elements are built from coefficient tensors, not PSD factors");
}

/// One rank-1 dual element per nonnegative eigenpair of a PSD factor.
inline std::vector<DualConeElement> dq_dual_elements(Condition condition, const Matrix& psd,
                                                     const PairBasis& basis, int n_particles) {
  detail::require_psd(psd, to_string(condition).data());
  const Spectrum s = eigendecompose(psd);
  std::vector<DualConeElement> out;
  const double cutoff = 1e-12 * std::max(1.0, s.max());
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    if (s.eigenvalues(k) <= cutoff) break;
    const Vector v = s.eigenvectors.col(k);
    out.push_back(pullback_dual_element(condition, s.eigenvalues(k) * v * v.transpose(), basis,
                                        n_particles));
  }
  return out;
}

}  // namespace rdmcone
