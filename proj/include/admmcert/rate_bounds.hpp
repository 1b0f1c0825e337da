#pragma once

// Closed-form rate bounds for over-relaxed ADMM with rho = sqrt(m L) kappa^eps.

#include <admmcert/errors.hpp>
#include <admmcert/lmi.hpp>

#include <algorithm>
#include <cmath>

namespace admmcert {

struct UpperRate {
  double tau;
  double C;
};

/// Analytic upper bound: tau = 1 - alpha / (2 kappa^(1/2 + |eps|)),
/// C = kappa_B sqrt(max(alpha / (2 - alpha), (2 - alpha) / alpha)).
inline UpperRate upper_rate(const ConditioningSpec& spec, double kappa_B = 1.0) {
  spec.validate();
  const double a = spec.alpha;
  if (!(a > 0.0 && a < 2.0)) throw DomainError("upper_rate: alpha must lie in (0, 2)");
  if (!(kappa_B >= 1.0)) throw DomainError("upper_rate: kappa_B must be >= 1");
  const double tau = 1.0 - a / (2.0 * std::pow(spec.kappa, 0.5 + std::abs(spec.epsilon)));
  const double C = kappa_B * std::sqrt(std::max(a / (2.0 - a), (2.0 - a) / a));
  return {tau, C};
}

/// Worst-case lower bound: 1 - 2 alpha / (1 + kappa^(1/2 + |eps|)).
inline double lower_bound_rate(const ConditioningSpec& spec) {
  spec.validate();
  return 1.0 - 2.0 * spec.alpha / (1.0 + std::pow(spec.kappa, 0.5 + std::abs(spec.epsilon)));
}

/// Eigenvalue of the z-iteration map on the quadratic instance
/// f = x'Qx/2, g = delta |z|^2 / 2 for an eigenvalue lambda of Q.
inline double t_matrix_eig(double lambda, double delta, double rho, double alpha) {
  if (!(lambda > 0.0)) throw DomainError("t_matrix_eig: lambda must be positive");
  if (!(delta >= 0.0)) throw DomainError("t_matrix_eig: delta must be >= 0");
  if (!(rho > 0.0)) throw DomainError("t_matrix_eig: rho must be positive");
  return 1.0 - alpha * rho * (lambda + delta) / ((rho + delta) * (lambda + rho));
}

struct BoundPair {
  double tau_upper;
  double C_upper;
  double tau_lower;
};

inline BoundPair bound_pair(const ConditioningSpec& spec, double kappa_B = 1.0) {
  const UpperRate up = upper_rate(spec, kappa_B);
  return {up.tau, up.C, lower_bound_rate(spec)};
}

struct WorstCase {
  double delta;
  double q_eig;  // eigenvalue of Q whose eigenvector is the slow mode
  double achieved_rate;
  double rho;
};

/// Quadratic instance with A = I, B = -I attaining a rate at least the
/// worst-case lower bound: delta = 0 on the smallest eigenvalue when
/// eps >= 0, delta = L on the largest otherwise.
inline WorstCase worst_case_construction(const ConditioningSpec& spec, double m, double L) {
  spec.validate();
  if (!(m > 0.0 && m <= L)) throw DomainError("worst_case_construction: need 0 < m <= L");
  const double kappa = L / m;
  if (std::abs(kappa - spec.kappa) > 1e-9 * spec.kappa) {
    throw DomainError("worst_case_construction: L / m must equal kappa");
  }
  const double a = spec.alpha;
  const double e = spec.epsilon;
  WorstCase w;
  w.rho = std::sqrt(m * L) * std::pow(kappa, e);
  if (e >= 0.0) {
    w.delta = 0.0;
    w.q_eig = m;
    w.achieved_rate = 1.0 - a / (1.0 + std::pow(kappa, 0.5 + e));
  } else {
    w.delta = L;
    w.q_eig = L;
    w.achieved_rate =
        1.0 - 2.0 * a / ((1.0 + std::pow(kappa, 0.5 - e)) * (std::pow(kappa, -0.5 + e) + 1.0));
  }
  return w;
}

}  // namespace admmcert
