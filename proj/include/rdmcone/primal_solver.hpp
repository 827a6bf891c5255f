#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rdmcone/nrep_maps.hpp"
#include "rdmcone/reduced_hamiltonian.hpp"
#include "rdmcone/solve_report.hpp"

namespace rdmcone {

struct PrimalProblem {
  ReducedHamiltonian K;
  std::vector<Condition> conditions{Condition::D2, Condition::Q2, Condition::G2};
  double tolerance = 1e-6;
  int max_iterations = 20000;
  /// Initial penalty parameter.
  double rho = 1.0;
  /// Over-relaxation factor in (0, 2).
  double relaxation = 1.6;
  /// rho is doubled or halved every 10 iterations while the primal/dual
  /// residual ratio exceeds this.
  double imbalance = 3.0;
  bool record_history = true;
};

/// Lowest eigenvalue of every imposed lifted matrix plus the trace error.
struct FeasibilitySummary {
  double trace_error = 0.0;
  std::optional<double> min_d2;
  std::optional<double> min_q2;
  std::optional<double> min_g2;

  double worst() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& v : {min_d2, min_q2, min_g2})
      if (v) w = std::min(w, *v);
    return w;
  }
};

inline FeasibilitySummary check_feasibility(const TwoRDM& rdm,
                                            const std::vector<Condition>& conditions) {
  FeasibilitySummary out;
  out.trace_error = rdm.trace_error();
  Matrix d = rdm.D.matrix();
  symmetrize(d);
  const PackedMatrix sym(rdm.basis(), d);
  if (has_condition(conditions, Condition::D2)) out.min_d2 = min_eigenvalue(d);
  if (rdm.n_particles < 2) return out;
  if (has_condition(conditions, Condition::Q2)) {
    Matrix q = q2_linear(sym, rdm.n_particles).matrix();
    q.diagonal().array() += 1.0;
    symmetrize(q);
    out.min_q2 = min_eigenvalue(q);
  }
  if (has_condition(conditions, Condition::G2)) {
    Matrix g = g2_map(sym, rdm.n_particles);
    symmetrize(g);
    out.min_g2 = min_eigenvalue(g);
  }
  return out;
}

namespace detail {

/// Lifted blocks of the primal problem: L_c(D) + b_c must be PSD, with
/// b_Q = I and b_D = b_G = 0.
struct PrimalBlocks {
  PairBasis basis;
  int n = 0;
  bool q = false;
  bool g = false;

  Matrix apply_q(const Matrix& d) const {
    return q2_linear(PackedMatrix(basis, d), n).matrix();
  }
  Matrix apply_g(const Matrix& d) const { return g2_map(PackedMatrix(basis, d), n); }
  Matrix adjoint_q(const Matrix& y) const {
    return q2_linear_adjoint(PackedMatrix(basis, y), n).matrix();
  }
  Matrix adjoint_g(const Matrix& y) const { return g2_adjoint(y, basis, n).matrix(); }

  /// sum_c L_c^+ L_c
  Matrix normal(const Matrix& d) const {
    Matrix out = d;
    if (q) out += adjoint_q(apply_q(d));
    if (g) out += adjoint_g(apply_g(d));
    symmetrize(out);
    return out;
  }
};

/// Conjugate gradients on the normal operator, warm-started from x.
inline void normal_solve(const PrimalBlocks& blocks, const Matrix& rhs, Matrix& x,
                         double tol = 1e-13, int max_iter = 1000) {
  Matrix res = rhs - blocks.normal(x);
  const double target = tol * std::max(1.0, rhs.norm());
  if (res.norm() <= target) return;
  Matrix p = res;
  double rr = res.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    const Matrix ap = blocks.normal(p);
    const double alpha = rr / frobenius_inner(p, ap);
    x += alpha * p;
    res -= alpha * ap;
    const double rr_new = res.squaredNorm();
    if (std::sqrt(rr_new) <= target) break;
    p = res + (rr_new / rr) * p;
    rr = rr_new;
  }
  symmetrize(x);
}

}  // namespace detail

/// Certified lower bound from PSD multipliers Y_c of the lifted blocks:
/// for any D with Tr D = c that satisfies the imposed conditions,
/// Tr(K D) >= c * lambda_min(K - sum_c L_c^+ Y_c) - Tr(Y_Q).
inline double primal_dual_bound(const ReducedHamiltonian& k, const std::vector<Condition>& conditions,
                                const Matrix& y_d, const Matrix& y_q, const Matrix& y_g) {
  const PairBasis& basis = k.basis();
  const int n = k.n_particles;
  Matrix s = k.K.matrix();
  if (has_condition(conditions, Condition::D2)) s -= y_d;
  double shift = 0.0;
  if (has_condition(conditions, Condition::Q2)) {
    s -= q2_linear_adjoint(PackedMatrix(basis, y_q), n).matrix();
    shift = y_q.trace();
  }
  if (has_condition(conditions, Condition::G2)) s -= g2_adjoint(y_g, basis, n).matrix();
  symmetrize(s);
  return k.pair_count() * min_eigenvalue(s) - shift + k.core_energy;
}

/// Boundary-point style ADMM on
///   min Tr(K D)  s.t.  Tr D = N(N-1)/2,  D, Q(D), G(D) PSD.
inline SolveReport solve_primal(const PrimalProblem& problem) {
  const auto start = std::chrono::steady_clock::now();
  const ReducedHamiltonian& kh = problem.K;
  const int n = kh.n_particles;
  if (n < 2) throw Error("primal solver needs N >= 2");
  if (n > kh.rank()) throw Error("infeasible normalization: more particles than spin orbitals");
  if (!has_condition(problem.conditions, Condition::D2))
    throw Error("primal conditions must include D2");
  if (has_condition(problem.conditions, Condition::T2))
    throw Error("T2 is only available in the dual solver");
  if (!(problem.relaxation > 0.0 && problem.relaxation < 2.0))
    throw Error("relaxation factor must lie in (0, 2)");

  const PairBasis basis = kh.basis();
  const int m = basis.dim();
  const int r2 = basis.rank() * basis.rank();
  const double c = kh.pair_count();
  detail::PrimalBlocks blocks{basis, n, has_condition(problem.conditions, Condition::Q2),
                              has_condition(problem.conditions, Condition::G2)};
  const Matrix& k = kh.K.matrix();
  const double k_norm = k.norm();
  const Matrix eye = Matrix::Identity(m, m);

  Matrix d = (c / m) * eye;
  Matrix z_d = d, u_d = Matrix::Zero(m, m);
  Matrix z_q, u_q = Matrix::Zero(m, m), z_g, u_g = Matrix::Zero(r2, r2);
  if (blocks.q) z_q = project_psd(blocks.apply_q(d) + eye);
  if (blocks.g) z_g = project_psd(blocks.apply_g(d));

  // Tr D = c is imposed through M^{-1} I, fixed for the whole run.
  Matrix w = eye;
  detail::normal_solve(blocks, eye, w);
  const double w_trace = w.trace();

  double rho = problem.rho;
  Matrix v = d;
  SolveReport report;
  report.method = "primal";
  report.conditions = problem.conditions;
  report.rigorous_bound = -std::numeric_limits<double>::infinity();

  int it = 0;
  for (; it < problem.max_iterations; ++it) {
    // D-step: M D = sum L^+(Z - U - b) - K/rho - mu I
    Matrix rhs = z_d - u_d - k / rho;
    if (blocks.q) rhs += blocks.adjoint_q(z_q - u_q - eye);
    if (blocks.g) rhs += blocks.adjoint_g(z_g - u_g);
    symmetrize(rhs);
    detail::normal_solve(blocks, rhs, v);
    d = v - ((v.trace() - c) / w_trace) * w;
    symmetrize(d);

    // Relaxed Z/U-steps; the updated U is the negative spectral part of the
    // projected argument, so -rho U stays PSD.
    const double alpha = problem.relaxation;
    double primal_sq = 0.0;
    Matrix dual_change = Matrix::Zero(m, m);
    Matrix y_d, y_q, y_g;
    auto cone_step = [&](const Matrix& lifted, Matrix& z, Matrix& u) {
      const Matrix relaxed = alpha * lifted + (1.0 - alpha) * z;
      ConeSplit s = split_psd(relaxed + u);
      Matrix change = s.positive - z;
      z = std::move(s.positive);
      u = std::move(s.negative);
      primal_sq += (lifted - z).squaredNorm();
      return change;
    };
    dual_change += cone_step(d, z_d, u_d);
    y_d = -rho * u_d;
    if (blocks.q) {
      dual_change += blocks.adjoint_q(cone_step(blocks.apply_q(d) + eye, z_q, u_q));
      y_q = -rho * u_q;
    }
    if (blocks.g) {
      dual_change += blocks.adjoint_g(cone_step(blocks.apply_g(d), z_g, u_g));
      y_g = -rho * u_g;
    }

    const double energy = frobenius_inner(k, d) + kh.core_energy;
    const double bound = primal_dual_bound(kh, problem.conditions, y_d, y_q, y_g);
    const double r_primal = std::sqrt(primal_sq);
    const double r_dual = rho * dual_change.norm() / (1.0 + k_norm);
    report.rigorous_bound = std::max(report.rigorous_bound, bound);
    const double gap = std::max(0.0, energy - report.rigorous_bound);
    const double r_gap = gap / (1.0 + std::abs(energy));
    if (problem.record_history) report.history.push_back({it + 1, energy, bound, r_primal});

    report.energy = energy;
    report.residual_primal = r_primal;
    report.residual_dual = r_dual;
    report.residual_gap = gap;
    if (std::max({r_primal, r_dual, r_gap}) <= problem.tolerance) {
      report.converged = true;
      ++it;
      break;
    }

    // Rebalance the penalty; scaled multipliers follow rho.
    double factor = 1.0;
    if (r_primal > problem.imbalance * r_dual) factor = 2.0;
    else if (r_dual > problem.imbalance * r_primal) factor = 0.5;
    if (factor != 1.0 && (it + 1) % 10 == 0) {
      rho *= factor;
      u_d /= factor;
      u_q /= factor;
      u_g /= factor;
    }
  }

  report.iterations = it;
  // Report the gap against the best certificate seen.
  report.residual_gap = std::max(0.0, report.energy - report.rigorous_bound);
  report.rdm = TwoRDM{PackedMatrix(basis, d), n};
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace rdmcone
