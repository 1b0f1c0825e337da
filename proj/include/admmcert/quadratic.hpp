#pragma once

// Quadratic test instances: f(x) = x'Qx/2, g(z) = delta |z|^2 / 2,
// A = I, B = -I, c = 0. The optimum is x = z = 0 and, once u = (delta/rho) z,
// the iteration reduces to z+ = T z.

#include <admmcert/admm.hpp>
#include <admmcert/errors.hpp>
#include <admmcert/linalg.hpp>
#include <admmcert/rate_bounds.hpp>

#include <memory>

namespace admmcert {

struct QuadraticInstance {
  SymMatrix Q;
  double delta = 0.0;
  double rho = 1.0;
  double alpha = 1.0;

  void validate() const {
    if (!(delta >= 0.0)) throw DomainError("QuadraticInstance: delta must be >= 0");
    if (!(rho > 0.0)) throw DomainError("QuadraticInstance: rho must be positive");
    if (!(detail::jacobi_eigensystem(Q.matrix()).values.front() > 0.0)) {
      throw DomainError("QuadraticInstance: Q must be positive definite");
    }
  }
};

struct QuadraticIterate {
  Vector x;
  Vector z;
  Vector u;
};

/// Closed-form update with a direct solve against Q + rho I.
inline QuadraticIterate quadratic_step(const QuadraticInstance& inst, const Vector& z,
                                       const Vector& u) {
  const Eigen::Index d = inst.Q.n();
  if (z.size() != d || u.size() != d) throw DimensionError("quadratic_step: dimension mismatch");
  const double rho = inst.rho;
  const double a = inst.alpha;
  const Matrix k = inst.Q.matrix() + rho * Matrix::Identity(d, d);
  QuadraticIterate out;
  out.x = rho * k.llt().solve(z - u);
  out.z = (rho / (inst.delta + rho)) * (a * out.x + (1.0 - a) * z + u);
  out.u = u + a * out.x + (1.0 - a) * z - out.z;
  return out;
}

/// T = alpha rho (rho - delta)/(rho + delta) (Q + rho I)^{-1} + (rho - alpha rho + delta)/(rho + delta) I.
inline Matrix t_matrix(const QuadraticInstance& inst) {
  const Eigen::Index d = inst.Q.n();
  const double rho = inst.rho;
  const double delta = inst.delta;
  const double a = inst.alpha;
  const Matrix inv = (inst.Q.matrix() + rho * Matrix::Identity(d, d)).inverse();
  return (a * rho * (rho - delta) / (rho + delta)) * inv +
         ((rho - a * rho + delta) / (rho + delta)) * Matrix::Identity(d, d);
}

/// The instance as a generic ADMM problem.
inline ProxProblem quadratic_problem(const QuadraticInstance& inst) {
  inst.validate();
  auto f = std::make_shared<QuadraticObjective>();
  f->blocks.push_back(inst.Q.matrix());
  f->h = Vector::Zero(inst.Q.n());
  return quadratic_f_problem(f, quadratic_z_solver(inst.delta), negated_identity_map(),
                             inst.Q.n(), Vector::Zero(inst.Q.n()));
}

/// Q = diag(m, L) with the worst-case delta and rho for the spec.
struct WorstCaseSetup {
  QuadraticInstance instance;
  WorstCase bound;
  Vector slow_direction;
};

enum class DeltaMode { automatic, zero, lipschitz };

inline WorstCaseSetup worst_case_setup(const ConditioningSpec& spec, DeltaMode mode = DeltaMode::automatic,
                                       double m = 1.0) {
  const double L = m * spec.kappa;
  WorstCaseSetup out;
  out.bound = worst_case_construction(spec, m, L);
  if (mode == DeltaMode::zero) {
    out.bound.delta = 0.0;
    out.bound.q_eig = m;
  } else if (mode == DeltaMode::lipschitz) {
    out.bound.delta = L;
    out.bound.q_eig = L;
  }
  out.bound.achieved_rate = t_matrix_eig(out.bound.q_eig, out.bound.delta, out.bound.rho, spec.alpha);
  Vector diag(2);
  diag << m, L;
  out.instance = {SymMatrix::diagonal(diag), out.bound.delta, out.bound.rho, spec.alpha};
  out.slow_direction = Vector::Zero(2);
  out.slow_direction(out.bound.q_eig == m ? 0 : 1) = 1.0;
  return out;
}

}  // namespace admmcert
