#pragma once

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rdmcone/nrep_maps.hpp"
#include "rdmcone/reduced_hamiltonian.hpp"
#include "rdmcone/solve_report.hpp"

namespace rdmcone {

struct DualProblem {
  ReducedHamiltonian K;
  /// Negative means "one per spin orbital".
  int n_g_factors = -1;
  int n_t2_factors = -1;
  /// Target for ||sum B_i - (K - eps I)||_F.
  double tolerance = 1e-6;
  int max_outer_iterations = 60;
  int max_inner_iterations = 2000;
  /// Outer iterations without a new best residual before giving up.
  int stall_window = 8;
  double sigma = 10.0;
  /// Kept small: large penalties stall the inner L-BFGS and the multiplier drifts.
  double sigma_max = 10.0;
  std::uint64_t seed = 0;
  bool record_history = true;

  int g_count() const { return n_g_factors < 0 ? K.rank() : n_g_factors; }
  int t2_count() const { return n_t2_factors < 0 ? K.rank() : n_t2_factors; }
};

/// Proof object: every element is in the dual cone, so for every
/// representable D with Tr D = c, Tr(K D) >= eps c + Tr(-R D).
struct DualCertificate {
  double epsilon = 0.0;
  std::vector<DualConeElement> elements;
  /// R = sum B_i - (K - eps I)
  PackedMatrix residual_matrix;
  double residual = 0.0;
};

struct MultiplierRDM {
  PackedMatrix X;
  int n_particles = 0;

  TwoRDM as_rdm() const { return {X, n_particles}; }
};

/// Factor parameters and multiplier state, reusable as a warm start.
struct DualState {
  Vector theta;
  PackedMatrix X;
  double sigma = 0.0;
};

struct DualResult {
  SolveReport report;
  DualCertificate certificate;
  MultiplierRDM multiplier;
  DualState state;
};

/// eps c + min(0, lambda_min(-R)) c: valid whatever the optimizer did.
inline double rigorous_bound(const DualCertificate& certificate, double trace) {
  const double low = min_eigenvalue(-certificate.residual_matrix.matrix());
  return certificate.epsilon * trace + std::min(0.0, low) * trace;
}

namespace detail {

/// theta = [F_D | F_Q | g_1..g_ng | c_1..c_nt], each column-major.
struct DualLayout {
  PairBasis basis;
  int n = 0;
  int n_g = 0;
  int n_t = 0;

  int m() const { return basis.dim(); }
  int r() const { return basis.rank(); }
  Eigen::Index f_size() const { return Eigen::Index(m()) * m(); }
  Eigen::Index g_offset() const { return 2 * f_size(); }
  Eigen::Index t_offset() const { return g_offset() + Eigen::Index(r()) * r() * n_g; }
  Eigen::Index t_size() const { return Eigen::Index(m()) * r(); }
  Eigen::Index size() const { return t_offset() + t_size() * n_t; }

  Eigen::Map<const Matrix> fd(const double* x) const { return {x, m(), m()}; }
  Eigen::Map<const Matrix> fq(const double* x) const { return {x + f_size(), m(), m()}; }
  Eigen::Map<const Matrix> g(const double* x) const {
    return {x + g_offset(), r() * r(), n_g};
  }
  Eigen::Map<const Matrix> t(const double* x, int i) const {
    return {x + t_offset() + i * t_size(), m(), r()};
  }
  Eigen::Map<Matrix> fd(double* x) const { return {x, m(), m()}; }
  Eigen::Map<Matrix> fq(double* x) const { return {x + f_size(), m(), m()}; }
  Eigen::Map<Matrix> g(double* x) const { return {x + g_offset(), r() * r(), n_g}; }
  Eigen::Map<Matrix> t(double* x, int i) const {
    return {x + t_offset() + i * t_size(), m(), r()};
  }
};

struct DualParts {
  Matrix d, q, g, t;

  Matrix total() const {
    Matrix b = d + q;
    if (g.size()) b += g;
    if (t.size()) b += t;
    symmetrize(b);
    return b;
  }
};

inline DualParts dual_parts(const DualLayout& layout, const double* x) {
  const PairBasis& basis = layout.basis;
  const int r = layout.r();
  DualParts p;
  const auto fd = layout.fd(x);
  p.d = fd * fd.transpose();
  const auto fq = layout.fq(x);
  const Matrix pq = fq * fq.transpose();
  p.q = q2_homogeneous_adjoint(PackedMatrix(basis, pq), layout.n).matrix();
  if (layout.n_g > 0) {
    const auto g = layout.g(x);
    const Matrix pg = g * g.transpose();
    p.g = g2_adjoint(pg, basis, layout.n).matrix();
  }
  if (layout.n_t > 0) {
    Matrix w = Matrix::Zero(r * r, r * r);
    for (int i = 0; i < layout.n_t; ++i)
      accumulate_t2_weight(t2_full_coefficients(layout.t(x, i), basis), r, layout.n, w);
    p.t = 0.25 * pack_adjoint(w, basis).matrix();
  }
  return p;
}

/// Augmented Lagrangian -E + <X,S> + sigma/2 |S|^2 with S = B + (E/c) I - K
/// and E eliminated at its optimum.
class DualObjective final : public ceres::FirstOrderFunction {
 public:
  DualObjective(const DualLayout& layout, const Matrix& k, const Matrix& x, double sigma)
      : layout_(layout), k_(k), x_(x), sigma_(sigma) {}

  int NumParameters() const override { return static_cast<int>(layout_.size()); }

  /// Optimal E for a given B.
  double energy(const Matrix& b) const {
    const double c = pair_count();
    const double m = layout_.m();
    return (c / m) * ((c - x_.trace()) / sigma_ - b.trace() + k_.trace());
  }

  double pair_count() const { return 0.5 * layout_.n * (layout_.n - 1); }

  Matrix constraint(const Matrix& b, double e) const {
    Matrix s = b - k_;
    s.diagonal().array() += e / pair_count();
    return s;
  }

  bool Evaluate(const double* theta, double* cost, double* gradient) const override {
    const Matrix b = dual_parts(layout_, theta).total();
    const double e = energy(b);
    const Matrix s = constraint(b, e);
    *cost = -e + frobenius_inner(x_, s) + 0.5 * sigma_ * s.squaredNorm();
    if (!std::isfinite(*cost)) return false;
    if (gradient == nullptr) return true;

    const PairBasis& basis = layout_.basis;
    const int n = layout_.n;
    Matrix w = x_ + sigma_ * s;
    symmetrize(w);
    double* grad = gradient;
    layout_.fd(grad) = 2.0 * w * layout_.fd(theta);
    Matrix qw = q2_homogeneous(PackedMatrix(basis, w), n).matrix();
    symmetrize(qw);
    layout_.fq(grad) = 2.0 * qw * layout_.fq(theta);
    if (layout_.n_g > 0) {
      Matrix gw = g2_map(PackedMatrix(basis, w), n);
      symmetrize(gw);
      layout_.g(grad) = 2.0 * gw * layout_.g(theta);
    }
    if (layout_.n_t > 0) {
      const Matrix w_full = unpack_full(PackedMatrix(basis, w));
      for (int i = 0; i < layout_.n_t; ++i)
        layout_.t(grad, i) = t2_gradient(w_full, layout_.t(theta, i), basis, n);
    }
    return true;
  }

 private:
  DualLayout layout_;
  const Matrix& k_;
  const Matrix& x_;
  double sigma_;
};

inline Vector initial_theta(const DualLayout& layout, const Matrix& k, std::uint64_t seed) {
  Vector theta = Vector::Zero(layout.size());
  // B_D = K - eps0 I makes the starting fit exact.
  const Spectrum s = eigendecompose(k);
  const double eps0 = s.min() - 1.0;
  layout.fd(theta.data()) =
      s.eigenvectors * (s.eigenvalues.array() - eps0).sqrt().matrix().asDiagonal();
  // One stream per factor family so changing one count leaves the others alone.
  auto fill = [&](auto block, std::uint64_t stream, double scale) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, scale);
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = normal(rng);
  };
  fill(layout.fq(theta.data()), 1, 1e-2);
  if (layout.n_g > 0) fill(layout.g(theta.data()), 2, 1e-2);
  for (int i = 0; i < layout.n_t; ++i) fill(layout.t(theta.data(), i), 3 + i, 1e-2);
  return theta;
}

inline DualCertificate build_certificate(const DualLayout& layout, const double* theta,
                                         const Matrix& k, double epsilon) {
  const PairBasis& basis = layout.basis;
  const int n = layout.n;
  DualCertificate cert;
  cert.epsilon = epsilon;
  const auto fd = layout.fd(theta);
  const Matrix pd = fd * fd.transpose();
  Matrix sum = Matrix::Zero(layout.m(), layout.m());
  cert.elements.push_back({PackedMatrix(basis, pd), Condition::D2, pd});
  const auto fq = layout.fq(theta);
  Matrix pq = fq * fq.transpose();
  symmetrize(pq);
  cert.elements.push_back(pullback_dual_element(Condition::Q2, pq, basis, n));
  for (int i = 0; i < layout.n_g; ++i) {
    const Vector g = layout.g(theta).col(i);
    cert.elements.push_back(pullback_dual_element(Condition::G2, g * g.transpose(), basis, n));
  }
  for (int i = 0; i < layout.n_t; ++i)
    cert.elements.push_back(
        t2_dual_element(T2FactorCoefficients(basis, Matrix(layout.t(theta, i))), n));
  for (const auto& e : cert.elements) sum += e.B.matrix();
  symmetrize(sum);
  Matrix r = sum - k;
  r.diagonal().array() += epsilon;
  cert.residual_matrix = PackedMatrix(basis, r);
  cert.residual = r.norm();
  return cert;
}

}  // namespace detail

/// Augmented-Lagrangian fit of sum_i B_i to K - eps I maximizing eps; the
/// fitting-constraint multiplier X is returned as the 2-RDM estimate.
inline DualResult solve_dual(const DualProblem& problem,
                             const std::optional<DualState>& warm = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  const ReducedHamiltonian& kh = problem.K;
  const int n = kh.n_particles;
  if (n < 2) throw Error("dual solver needs N >= 2");
  if (n > kh.rank()) throw Error("infeasible normalization: more particles than spin orbitals");
  if (problem.n_g_factors < -1 || problem.n_t2_factors < -1)
    throw Error("factor counts must be nonnegative");

  const detail::DualLayout layout{kh.basis(), n, problem.g_count(), problem.t2_count()};
  const Matrix& k = kh.K.matrix();
  const int m = layout.m();
  const double c = kh.pair_count();

  Vector theta;
  Matrix x;
  double sigma = problem.sigma;
  if (warm) {
    if (warm->theta.size() != layout.size()) throw Error("warm start has the wrong layout");
    theta = warm->theta;
    x = warm->X.matrix();
    sigma = warm->sigma;
  } else {
    theta = detail::initial_theta(layout, k, problem.seed);
    x = (c / m) * Matrix::Identity(m, m);
  }

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = problem.max_inner_iterations;
  options.function_tolerance = 1e-16;
  options.parameter_tolerance = 1e-16;
  options.logging_type = ceres::SILENT;

  DualResult out;
  SolveReport& report = out.report;
  report.method = "dual";
  report.conditions = {Condition::D2, Condition::Q2};
  if (layout.n_g > 0) report.conditions.push_back(Condition::G2);
  if (layout.n_t > 0) report.conditions.push_back(Condition::T2);
  report.rigorous_bound = -std::numeric_limits<double>::infinity();

  double best_residual = std::numeric_limits<double>::infinity();
  int since_best = 0;
  double previous_residual = std::numeric_limits<double>::infinity();
  double energy = 0.0;
  double residual = 0.0;
  int outer = 0;
  for (; outer < problem.max_outer_iterations; ++outer) {
    // Tighten the inner solve as the fit converges.
    options.gradient_tolerance =
        std::max(1e-13, 1e-3 * std::min(problem.tolerance, std::isfinite(previous_residual)
                                                               ? previous_residual
                                                               : 1.0));
    ceres::GradientProblem gp(new detail::DualObjective(layout, k, x, sigma));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, gp, theta.data(), &summary);
    if (!theta.allFinite())
      throw Error("dual solver: non-finite factors at outer iteration " +
                  std::to_string(outer + 1));

    const detail::DualObjective obj(layout, k, x, sigma);
    const Matrix b = detail::dual_parts(layout, theta.data()).total();
    energy = obj.energy(b);
    const Matrix s = obj.constraint(b, energy);
    residual = s.norm();
    if (!std::isfinite(energy) || !std::isfinite(residual))
      throw Error("dual solver: NaN in line search at outer iteration " +
                  std::to_string(outer + 1));

    Matrix r = -s;  // K - eps I - B
    const double bound =
        energy + std::min(0.0, min_eigenvalue(r)) * c + kh.core_energy;
    report.rigorous_bound = std::max(report.rigorous_bound, bound);
    if (problem.record_history)
      report.history.push_back({outer + 1, energy + kh.core_energy, bound, residual});

    x += sigma * s;
    symmetrize(x);

    if (residual <= problem.tolerance) {
      report.converged = true;
      ++outer;
      break;
    }
    if (residual < best_residual) {
      best_residual = residual;
      since_best = 0;
    } else if (++since_best >= problem.stall_window) {
      ++outer;
      break;
    }
    if (residual > 0.25 * previous_residual) sigma = std::min(problem.sigma_max, 4.0 * sigma);
    previous_residual = residual;
  }

  const double epsilon = energy / c;
  out.certificate = detail::build_certificate(layout, theta.data(), k, epsilon);
  report.energy = energy + kh.core_energy;
  report.residual_primal = residual;
  report.residual_dual = 0.0;
  report.residual_gap = std::max(0.0, report.energy - report.rigorous_bound);
  report.iterations = outer;
  report.rdm = TwoRDM{PackedMatrix(kh.basis(), x), n};
  out.multiplier = MultiplierRDM{PackedMatrix(kh.basis(), x), n};
  out.state = DualState{theta, PackedMatrix(kh.basis(), x), sigma};
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct HellmannFeynmanEntry {
  double central_difference = 0.0;
  double multiplier_trace = 0.0;
  double discrepancy = 0.0;
  bool converged = true;
};

/// Re-solves at K +/- step * Delta from the base solution and compares the
/// central difference of E* with Tr(Delta X*).
inline std::vector<HellmannFeynmanEntry> hellmann_feynman_check(
    const DualProblem& problem, const DualResult& base, const std::vector<PackedMatrix>& directions,
    double step) {
  if (!(step >= 1e-6 && step <= 1e-2)) throw Error("finite-difference step must lie in [1e-6, 1e-2]");
  std::vector<HellmannFeynmanEntry> out;
  for (const auto& delta : directions) {
    HellmannFeynmanEntry entry;
    entry.multiplier_trace = hermitian_inner_product(delta, base.multiplier.X);
    if (delta.matrix().norm() == 0.0) {
      entry.central_difference = 0.0;
      entry.discrepancy = std::abs(entry.multiplier_trace);
      out.push_back(entry);
      continue;
    }
    double e[2];
    for (int side = 0; side < 2; ++side) {
      DualProblem shifted = problem;
      shifted.K.K = problem.K.K + ((side == 0 ? 1.0 : -1.0) * step) * delta;
      shifted.record_history = false;
      const DualResult res = solve_dual(shifted, base.state);
      entry.converged = entry.converged && res.report.converged;
      // (theta, eps) solves the problem for K + R exactly, so remove R to
      // first order.
      e[side] = res.report.energy -
                hermitian_inner_product(res.multiplier.X, res.certificate.residual_matrix);
    }
    entry.central_difference = (e[0] - e[1]) / (2.0 * step);
    entry.discrepancy = std::abs(entry.central_difference - entry.multiplier_trace);
    out.push_back(entry);
  }
  return out;
}

}  // namespace rdmcone
