#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rdmcone/error.hpp"

namespace rdmcone {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Packed position of an antisymmetric pair together with the permutation
/// sign picked up when the caller's orbital order was (larger, smaller).
struct SignedIndex {
  int index;
  int sign;

  friend bool operator==(const SignedIndex&, const SignedIndex&) = default;
};

/// Lexicographic indexing of the pairs (i,j), i<j, over r spin orbitals:
/// (0,1),(0,2),...,(r-2,r-1).
class PairBasis {
 public:
  PairBasis() = default;

  explicit PairBasis(int rank) : rank_(rank) {
    if (rank < 2) throw Error("PairBasis needs at least two orbitals");
  }

  int rank() const noexcept { return rank_; }
  int dim() const noexcept { return rank_ * (rank_ - 1) / 2; }

  SignedIndex index_of(int i, int j) const {
    if (i < 0 || j < 0 || i >= rank_ || j >= rank_)
      throw Error("orbital index out of range: (" + std::to_string(i) + "," +
                  std::to_string(j) + ") for rank " + std::to_string(rank_));
    if (i == j) throw Error("diagonal pair not in antisymmetric space");
    if (i < j) return {ordered_index(i, j), 1};
    return {ordered_index(j, i), -1};
  }

  /// Unchecked index for i<j.
  int ordered_index(int i, int j) const noexcept {
    return i * rank_ - i * (i + 1) / 2 + (j - i - 1);
  }

  std::pair<int, int> pair_of(int index) const {
    if (index < 0 || index >= dim()) throw Error("pair index out of range");
    int i = 0;
    int row_len = rank_ - 1;
    while (index >= row_len) {
      index -= row_len;
      ++i;
      --row_len;
    }
    return {i, i + 1 + index};
  }

  friend bool operator==(const PairBasis&, const PairBasis&) = default;

 private:
  int rank_ = 0;
};

/// Real symmetric matrix over a PairBasis (2-RDMs, reduced Hamiltonians,
/// dual-cone elements, Lagrange multipliers).
class PackedMatrix {
 public:
  PackedMatrix() = default;

  explicit PackedMatrix(PairBasis basis)
      : basis_(basis), elements_(Matrix::Zero(basis.dim(), basis.dim())) {}

  PackedMatrix(PairBasis basis, Matrix elements)
      : basis_(basis), elements_(std::move(elements)) {
    if (elements_.rows() != basis_.dim() || elements_.cols() != basis_.dim())
      throw Error("packed matrix dimension does not match its pair basis");
  }

  static PackedMatrix identity(PairBasis basis) {
    return {basis, Matrix::Identity(basis.dim(), basis.dim())};
  }

  const PairBasis& basis() const noexcept { return basis_; }
  int dim() const noexcept { return basis_.dim(); }
  const Matrix& matrix() const noexcept { return elements_; }
  Matrix& matrix() noexcept { return elements_; }

  double operator()(int a, int b) const { return elements_(a, b); }
  double& operator()(int a, int b) { return elements_(a, b); }

  /// Element <a_i^+ a_j^+ a_l a_k>-style access with orbital indices in any
  /// order; zero when either pair is diagonal.
  double element(int i, int j, int k, int l) const {
    if (i == j || k == l) return 0.0;
    const auto row = basis_.index_of(i, j);
    const auto col = basis_.index_of(k, l);
    return row.sign * col.sign * elements_(row.index, col.index);
  }

  void set_element(int i, int j, int k, int l, double value) {
    const auto row = basis_.index_of(i, j);
    const auto col = basis_.index_of(k, l);
    elements_(row.index, col.index) = row.sign * col.sign * value;
  }

  double trace() const { return elements_.trace(); }

  void symmetrize() { elements_ = 0.5 * (elements_ + elements_.transpose()).eval(); }

  PackedMatrix& operator+=(const PackedMatrix& other) {
    require_same_basis(other);
    elements_ += other.elements_;
    return *this;
  }
  PackedMatrix& operator-=(const PackedMatrix& other) {
    require_same_basis(other);
    elements_ -= other.elements_;
    return *this;
  }
  PackedMatrix& operator*=(double s) {
    elements_ *= s;
    return *this;
  }
  friend PackedMatrix operator+(PackedMatrix a, const PackedMatrix& b) { return a += b; }
  friend PackedMatrix operator-(PackedMatrix a, const PackedMatrix& b) { return a -= b; }
  friend PackedMatrix operator*(double s, PackedMatrix a) { return a *= s; }

  void require_same_basis(const PackedMatrix& other) const {
    if (!(basis_ == other.basis_)) throw Error("pair basis mismatch");
  }

 private:
  PairBasis basis_;
  Matrix elements_;
};

/// Eigenpairs of a real symmetric matrix, eigenvalues nonincreasing.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  double min() const { return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0; }
  double max() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }

  Matrix reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }
};

inline double asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline Spectrum eigendecompose(const Matrix& m, double symmetry_tol = 1e-8) {
  if (m.rows() != m.cols()) throw Error("eigendecompose: matrix is not square");
  if (m.size() == 0) return {};
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (asymmetry(m) > symmetry_tol * scale)
    throw Error("eigendecompose: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw Error("eigendecompose: solver failed");
  // Eigen sorts ascending.
  Spectrum s;
  s.eigenvalues = solver.eigenvalues().reverse();
  s.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return s;
}

inline Spectrum eigendecompose(const PackedMatrix& m, double symmetry_tol = 1e-8) {
  return eigendecompose(m.matrix(), symmetry_tol);
}

/// Index sets of the connected components of the nonzero pattern of a
/// symmetric matrix. Spin and particle-number conservation make the lifted
/// matrices block diagonal with exact zeros elsewhere.
inline std::vector<std::vector<int>> block_components(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i)
      if (m(i, j) != 0.0 || m(j, i) != 0.0) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<int>> blocks;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[root]].push_back(i);
  }
  return blocks;
}

namespace detail {

inline Matrix gather(const Matrix& m, const std::vector<int>& idx) {
  const int k = static_cast<int>(idx.size());
  Matrix out(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) out(i, j) = m(idx[i], idx[j]);
  return out;
}

inline void scatter(const Matrix& block, const std::vector<int>& idx, Matrix& m) {
  const int k = static_cast<int>(idx.size());
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) m(idx[i], idx[j]) = block(i, j);
}

}  // namespace detail

inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  double low = std::numeric_limits<double>::infinity();
  for (const auto& idx : block_components(m)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(detail::gather(m, idx), Eigen::EigenvaluesOnly);
    low = std::min(low, solver.eigenvalues()(0));
  }
  return low;
}

/// Tr(A B) over a common pair basis.
inline double hermitian_inner_product(const PackedMatrix& a, const PackedMatrix& b) {
  a.require_same_basis(b);
  return a.matrix().cwiseProduct(b.matrix().transpose()).sum();
}

inline double frobenius_inner(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

/// Splits a symmetric matrix into its positive and negative spectral parts.
struct ConeSplit {
  Matrix positive;
  Matrix negative;
};

inline ConeSplit split_psd(const Matrix& m) {
  ConeSplit out;
  if (m.size() == 0) return out;
  const Matrix sym = 0.5 * (m + m.transpose());
  out.positive = Matrix::Zero(m.rows(), m.cols());
  out.negative = Matrix::Zero(m.rows(), m.cols());
  for (const auto& idx : block_components(sym)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(detail::gather(sym, idx));
    const Vector& w = solver.eigenvalues();
    const Matrix& v = solver.eigenvectors();
    detail::scatter(v * w.cwiseMax(0.0).asDiagonal() * v.transpose(), idx, out.positive);
    detail::scatter(v * w.cwiseMin(0.0).asDiagonal() * v.transpose(), idx, out.negative);
  }
  return out;
}

/// Nearest positive semidefinite matrix in Frobenius norm.
inline Matrix project_psd(const Matrix& m) { return split_psd(m).positive; }

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

/// Expands packed storage into the full antisymmetric tensor T[(p,q),(r,s)]
/// laid out as an r^2 x r^2 matrix with compound index p*r+q.
inline Matrix unpack_full(const PackedMatrix& m) {
  const int r = m.basis().rank();
  Matrix full = Matrix::Zero(r * r, r * r);
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q) {
      const int a = m.basis().ordered_index(p, q);
      for (int s = 0; s < r; ++s)
        for (int t = s + 1; t < r; ++t) {
          const double v = m(a, m.basis().ordered_index(s, t));
          full(p * r + q, s * r + t) = v;
          full(q * r + p, s * r + t) = -v;
          full(p * r + q, t * r + s) = -v;
          full(q * r + p, t * r + s) = v;
        }
    }
  return full;
}

/// Adjoint of unpack_full: sum_{all pqrs} T * full(D) = Tr(pack_adjoint(T) D).
/// Equals the double antisymmetrization A_pq A_rs T restricted to p<q, r<s.
inline PackedMatrix pack_adjoint(const Matrix& full, const PairBasis& basis) {
  const int r = basis.rank();
  PackedMatrix out(basis);
  for (int p = 0; p < r; ++p)
    for (int q = p + 1; q < r; ++q) {
      const int a = basis.ordered_index(p, q);
      for (int s = 0; s < r; ++s)
        for (int t = s + 1; t < r; ++t) {
          out(a, basis.ordered_index(s, t)) =
              full(p * r + q, s * r + t) - full(q * r + p, s * r + t) -
              full(p * r + q, t * r + s) + full(q * r + p, t * r + s);
        }
    }
  return out;
}

}  // namespace rdmcone
