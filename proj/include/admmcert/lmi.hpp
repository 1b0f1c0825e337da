#pragma once

// The 4x4 rate LMI of over-relaxed ADMM in normalized coordinates.
//
// The state is xi = (s, u) with s = Bz, and the input is nu = (beta, gamma)
// where beta is the gradient of the normalized f and gamma a subgradient of
// the normalized g. Everything here depends on the problem only through
// kappa, the step-size exponent epsilon (rho0 = kappa^epsilon) and alpha.

#include <admmcert/errors.hpp>
#include <admmcert/linalg.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <utility>

namespace admmcert {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// Normalized problem data: kappa = kappa_f * kappa_A^2, rho0 = kappa^epsilon.
struct ConditioningSpec {
  double kappa = 1.0;
  double epsilon = 0.0;
  double alpha = 1.0;

  double rho0() const { return std::pow(kappa, epsilon); }

  void validate() const {
    if (!std::isfinite(kappa) || !std::isfinite(epsilon) || !std::isfinite(alpha)) {
      throw DomainError("ConditioningSpec: non-finite field");
    }
    if (kappa < 1.0) throw DomainError("ConditioningSpec: kappa must be >= 1");
    if (!(alpha > 0.0)) throw DomainError("ConditioningSpec: alpha must be > 0");
  }
};

struct LmiBlocks {
  Mat2 A_hat = Mat2::Zero();
  Mat2 B_hat = Mat2::Zero();
  Mat2 C1_hat = Mat2::Zero();
  Mat2 D1_hat = Mat2::Zero();
  Mat2 C2_hat = Mat2::Zero();
  Mat2 D2_hat = Mat2::Zero();
  Mat2 M1 = Mat2::Zero();
  Mat2 M2 = Mat2::Zero();
};

/// Certificate of linear convergence at rate tau.
struct RateCertificate {
  SymMatrix P = SymMatrix::identity(2);
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double tau = 0.0;

  bool satisfies_invariants() const {
    if (P.n() != 2 || !std::isfinite(lambda1) || !std::isfinite(lambda2)) return false;
    if (lambda1 < 0.0 || lambda2 < 0.0) return false;
    if (!(tau > 0.0 && tau < 1.0)) return false;
    return sym_eigs(P).front() > 0.0;
  }

  RateCertificate scaled(double c) const { return {P.scaled(c), c * lambda1, c * lambda2, tau}; }
};

/// State-space matrices of the over-relaxed iteration. M1 and M2 are left zero.
inline LmiBlocks build_blocks(double alpha) {
  if (!std::isfinite(alpha)) throw DomainError("build_blocks: alpha must be finite");
  LmiBlocks b;
  b.A_hat << 1.0, alpha - 1.0, 0.0, 0.0;
  b.B_hat << alpha, -1.0, 0.0, -1.0;
  b.C1_hat << -1.0, -1.0, 0.0, 0.0;
  b.D1_hat << -1.0, 0.0, 1.0, 0.0;
  b.C2_hat << 1.0, alpha - 1.0, 0.0, 0.0;
  b.D2_hat << alpha, -1.0, 0.0, 1.0;
  return b;
}

struct IqcWeights {
  SymMatrix M1;
  SymMatrix M2;
};

namespace detail {

inline Mat2 sector_weight(const ConditioningSpec& spec) {
  const double k = spec.kappa;
  const double e = spec.epsilon;
  const double off = std::pow(k, -0.5 - e) + std::pow(k, 0.5 - e);
  Mat2 m;
  m << -2.0 * std::pow(k, -2.0 * e), off, off, -2.0;
  return m;
}

inline Mat2 monotone_weight() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

}  // namespace detail

/// Sector weight M1 (strong convexity + Lipschitz gradient of the
/// normalized f) and monotonicity weight M2 (subdifferential of g).
inline IqcWeights build_iqc_weights(const ConditioningSpec& spec) {
  spec.validate();
  return {SymMatrix(detail::sector_weight(spec)), SymMatrix(detail::monotone_weight())};
}

/// build_blocks plus the weights for the given spec.
inline LmiBlocks make_lmi_blocks(const ConditioningSpec& spec) {
  spec.validate();
  LmiBlocks b = build_blocks(spec.alpha);
  b.M1 = detail::sector_weight(spec);
  b.M2 = detail::monotone_weight();
  return b;
}

namespace detail {

inline Mat4 assemble(const LmiBlocks& b, const Mat2& p, double lambda1, double lambda2,
                     double tau) {
  Eigen::Matrix<double, 2, 4> ab;
  ab << b.A_hat, b.B_hat;
  Eigen::Matrix<double, 2, 4> g1;
  g1 << b.C1_hat, b.D1_hat;
  Eigen::Matrix<double, 2, 4> g2;
  g2 << b.C2_hat, b.D2_hat;
  Mat4 out = ab.transpose() * p * ab;
  out.topLeftCorner<2, 2>() -= tau * tau * p;
  out += lambda1 * (g1.transpose() * b.M1 * g1);
  out += lambda2 * (g2.transpose() * b.M2 * g2);
  return 0.5 * (out + out.transpose());
}

inline double certificate_scale(const Mat4& lmi) { return 1.0 + lmi.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Relative eigenvalue slack used by every certificate check.
inline constexpr double kFeasibilitySlack = 1e-9;

/// Right-hand side of the rate LMI; certified when negative semidefinite.
inline SymMatrix assemble_lmi(const LmiBlocks& blocks, const RateCertificate& cert) {
  if (cert.P.n() != 2) throw DimensionError("assemble_lmi: P must be 2x2");
  return SymMatrix(Matrix(detail::assemble(blocks, cert.P.matrix(), cert.lambda1,
                                           cert.lambda2, cert.tau)));
}

/// True iff the certificate's invariants hold and lambda_max of the
/// assembled LMI is at most margin + 1e-9 * (1 + max|entry|).
inline bool check_certificate(const ConditioningSpec& spec, const RateCertificate& cert,
                              double margin) {
  if (margin < 0.0) throw DomainError("check_certificate: margin must be >= 0");
  if (!cert.satisfies_invariants()) return false;
  const Mat4 lmi = detail::assemble(make_lmi_blocks(spec), cert.P.matrix(), cert.lambda1,
                                    cert.lambda2, cert.tau);
  const double top = detail::max_eigenvalue(lmi);
  return top <= margin + kFeasibilitySlack * detail::certificate_scale(lmi);
}

/// Closed-form certificate valid for large enough kappa and alpha in (0, 2):
/// P = [1, alpha-1; alpha-1, 1], lambda1 = alpha kappa^(eps-1/2),
/// lambda2 = alpha, tau = 1 - alpha / (2 kappa^(1/2 + |eps|)).
inline RateCertificate analytic_certificate(const ConditioningSpec& spec) {
  spec.validate();
  const double a = spec.alpha;
  if (!(a > 0.0 && a < 2.0)) {
    throw DomainError("analytic_certificate: alpha must lie in (0, 2)");
  }
  RateCertificate c;
  c.P = SymMatrix{{1.0, a - 1.0}, {a - 1.0, 1.0}};
  c.lambda1 = a * std::pow(spec.kappa, spec.epsilon - 0.5);
  c.lambda2 = a;
  c.tau = 1.0 - a / (2.0 * std::pow(spec.kappa, 0.5 + std::abs(spec.epsilon)));
  return c;
}

/// Quadratic form [a1-a2; b1-b2]^T (M kron I_d) [a1-a2; b1-b2].
inline double iqc_form_residual(const SymMatrix& m, std::span<const double> a1,
                                std::span<const double> a2, std::span<const double> b1,
                                std::span<const double> b2) {
  if (m.n() != 2) throw DimensionError("iqc_form_residual: M must be 2x2");
  const std::size_t d = a1.size();
  if (a2.size() != d || b1.size() != d || b2.size() != d) {
    throw DimensionError("iqc_form_residual: vector dimensions differ");
  }
  double aa = 0.0;
  double ab = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double da = a1[i] - a2[i];
    const double db = b1[i] - b2[i];
    aa += da * da;
    ab += da * db;
    bb += db * db;
  }
  return m(0, 0) * aa + 2.0 * m(0, 1) * ab + m(1, 1) * bb;
}

inline double iqc_form_residual(const SymMatrix& m, const Vector& a1, const Vector& a2,
                                const Vector& b1, const Vector& b2) {
  return iqc_form_residual(m, std::span<const double>(a1.data(), a1.size()),
                           std::span<const double>(a2.data(), a2.size()),
                           std::span<const double>(b1.data(), b1.size()),
                           std::span<const double>(b2.data(), b2.size()));
}

/// Smallest kappa on a log grid above which the analytic certificate
/// passes for every grid point up to kappa_max; NaN when it fails at
/// kappa_max already.
inline double analytic_certificate_threshold(double epsilon, double alpha,
                                             double kappa_max = 1e6, int points_per_decade = 40) {
  const int total = static_cast<int>(std::ceil(std::log10(kappa_max) * points_per_decade));
  double threshold = std::nan("");
  for (int i = total; i >= 0; --i) {
    const double kappa = std::pow(10.0, static_cast<double>(i) / points_per_decade);
    const ConditioningSpec spec{kappa, epsilon, alpha};
    if (!check_certificate(spec, analytic_certificate(spec), 0.0)) break;
    threshold = kappa;
  }
  return threshold;
}

}  // namespace admmcert
