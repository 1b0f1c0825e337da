#pragma once

// Feasibility search for the rate LMI and the bisections built on it.
//
// For fixed tau the LMI is linear in (P, lambda1, lambda2) and homogeneous,
// so trace(P) = 2 is fixed and P = [1+a, b; b, 1-a]. The oracle minimizes
// lambda_max of the assembled matrix over (a, b, lambda1, lambda2) with
// lambda_min(P) >= delta_P and 0 <= lambda_i <= lambda_cap, using a
// log-det barrier method on the epigraph variable t >= lambda_max.
// Newton steps in five variables are cheap, and the barrier duality gap
// gives a lower bound that ends hopeless searches early.

#include <admmcert/errors.hpp>
#include <admmcert/linalg.hpp>
#include <admmcert/lmi.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace admmcert {

enum class FeasibilityStatus { certified, not_found };

inline const char* to_string(FeasibilityStatus s) {
  return s == FeasibilityStatus::certified ? "certified" : "not-found";
}

struct FeasibilityReport {
  FeasibilityStatus status = FeasibilityStatus::not_found;
  std::optional<RateCertificate> certificate;
  double residual = std::numeric_limits<double>::infinity();  // lambda_max at the returned point
  double lower_bound = -std::numeric_limits<double>::infinity();  // on min lambda_max
  int solver_iterations = 0;

  bool certified() const { return status == FeasibilityStatus::certified; }
};

struct FeasibilityOptions {
  double min_p_eigenvalue = 1e-6;
  double lambda_cap = 1e6;
  int max_newton_steps = 600;
  double barrier_growth = 10.0;
  double max_barrier_weight = 1e14;
  /// Relative slack the search must reach. Kept far below the 1e-9 of
  /// check_certificate because 1 + max|entry| grows with lambda1.
  double search_slack = 1e-13;
};

namespace detail {

/// Affine parameterization X(a, b, s1, s2) = X0 + a Xa + b Xb + s1 X1 + s2 X2
/// with lambda1 = c1 s1 and lambda2 = c2 s2.
struct LmiPencil {
  std::array<Mat4, 5> terms;  // X0, Xa, Xb, X1, X2
  double c1 = 1.0;
  double c2 = 1.0;

  Mat4 at(double a, double b, double s1, double s2) const {
    return terms[0] + a * terms[1] + b * terms[2] + s1 * terms[3] + s2 * terms[4];
  }
};

inline LmiPencil make_pencil(const LmiBlocks& blocks, double tau) {
  LmiPencil pencil;
  const Mat2 eye = Mat2::Identity();
  Mat2 pa;
  pa << 1.0, 0.0, 0.0, -1.0;
  Mat2 pb;
  pb << 0.0, 1.0, 1.0, 0.0;
  const Mat2 zero = Mat2::Zero();
  pencil.c1 = 1.0 / std::max(1.0, blocks.M1.cwiseAbs().maxCoeff());
  pencil.c2 = 1.0 / std::max(1.0, blocks.M2.cwiseAbs().maxCoeff());
  pencil.terms[0] = assemble(blocks, eye, 0.0, 0.0, tau);
  pencil.terms[1] = assemble(blocks, pa, 0.0, 0.0, tau);
  pencil.terms[2] = assemble(blocks, pb, 0.0, 0.0, tau);
  pencil.terms[3] = assemble(blocks, zero, pencil.c1, 0.0, tau);
  pencil.terms[4] = assemble(blocks, zero, 0.0, pencil.c2, tau);
  return pencil;
}

// y = (a, b, s1, s2, t)
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

class BarrierProblem {
 public:
  BarrierProblem(const LmiPencil& pencil, const FeasibilityOptions& opts)
      : pencil_(pencil),
        delta_(opts.min_p_eigenvalue),
        cap1_(opts.lambda_cap / pencil.c1),
        cap2_(opts.lambda_cap / pencil.c2) {}

  double cap1() const { return cap1_; }
  double cap2() const { return cap2_; }

  Mat4 lmi(const Vec5& y) const { return pencil_.at(y(0), y(1), y(2), y(3)); }

  Mat2 p_shift(const Vec5& y) const {
    Mat2 g;
    g << 1.0 + y(0) - delta_, y(1), y(1), 1.0 - y(0) - delta_;
    return g;
  }

  bool interior(const Vec5& y) const {
    if (!(y(2) > 0.0 && y(2) < cap1_ && y(3) > 0.0 && y(3) < cap2_)) return false;
    Eigen::LLT<Mat4> f(Mat4(y(4) * Mat4::Identity() - lmi(y)));
    if (f.info() != Eigen::Success) return false;
    Eigen::LLT<Mat2> g(p_shift(y));
    return g.info() == Eigen::Success;
  }

  /// s * t - logdet(tI - X) - logdet(P - delta I) - sum of box log barriers.
  double value(const Vec5& y, double weight) const {
    Eigen::LLT<Mat4> f(Mat4(y(4) * Mat4::Identity() - lmi(y)));
    Eigen::LLT<Mat2> g(p_shift(y));
    double v = weight * y(4);
    v -= 2.0 * f.matrixLLT().diagonal().array().log().sum();
    v -= 2.0 * g.matrixLLT().diagonal().array().log().sum();
    v -= std::log(y(2)) + std::log(cap1_ - y(2)) + std::log(y(3)) + std::log(cap2_ - y(3));
    return v;
  }

  void derivatives(const Vec5& y, double weight, Vec5& grad, Mat5& hess) const {
    const Mat4 s = (y(4) * Mat4::Identity() - lmi(y)).inverse();
    std::array<Mat4, 5> df;
    for (int j = 0; j < 4; ++j) df[static_cast<std::size_t>(j)] = -pencil_.terms[static_cast<std::size_t>(j + 1)];
    df[4] = Mat4::Identity();
    std::array<Mat4, 5> sdf;
    for (std::size_t j = 0; j < 5; ++j) sdf[j] = s * df[j];

    const Mat2 r = p_shift(y).inverse();
    std::array<Mat2, 2> dg;
    dg[0] << 1.0, 0.0, 0.0, -1.0;
    dg[1] << 0.0, 1.0, 1.0, 0.0;
    std::array<Mat2, 2> rdg{r * dg[0], r * dg[1]};

    grad.setZero();
    hess.setZero();
    grad(4) = weight;
    for (int j = 0; j < 5; ++j) {
      grad(j) -= sdf[static_cast<std::size_t>(j)].trace();
      for (int k = j; k < 5; ++k) {
        const double h =
            (sdf[static_cast<std::size_t>(j)] * sdf[static_cast<std::size_t>(k)]).trace();
        hess(j, k) += h;
        if (k != j) hess(k, j) += h;
      }
    }
    for (int j = 0; j < 2; ++j) {
      grad(j) -= rdg[static_cast<std::size_t>(j)].trace();
      for (int k = 0; k < 2; ++k) {
        hess(j, k) += (rdg[static_cast<std::size_t>(j)] * rdg[static_cast<std::size_t>(k)]).trace();
      }
    }
    const std::array<double, 2> caps{cap1_, cap2_};
    for (int i = 0; i < 2; ++i) {
      const double v = y(2 + i);
      const double u = caps[static_cast<std::size_t>(i)] - v;
      grad(2 + i) += -1.0 / v + 1.0 / u;
      hess(2 + i, 2 + i) += 1.0 / (v * v) + 1.0 / (u * u);
    }
  }

  RateCertificate certificate(const Vec5& y, double tau) const {
    RateCertificate c;
    c.P = SymMatrix{{1.0 + y(0), y(1)}, {y(1), 1.0 - y(0)}};
    c.lambda1 = pencil_.c1 * y(2);
    c.lambda2 = pencil_.c2 * y(3);
    c.tau = tau;
    return c;
  }

 private:
  const LmiPencil& pencil_;
  double delta_;
  double cap1_;
  double cap2_;
};

}  // namespace detail

/// Searches for (P, lambda1, lambda2) certifying rate tau.
///
/// Certified means lambda_max(LMI) <= search_slack * (1 + max|entry|), so
/// the returned certificate passes check_certificate with margin 0. not-found is
/// one-sided: it does not prove infeasibility, although `lower_bound` is a
/// barrier duality bound on the minimal lambda_max within the search box.
inline FeasibilityReport find_certificate(const ConditioningSpec& spec, double tau,
                                          const FeasibilityOptions& opts = {}) {
  spec.validate();
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("find_certificate: tau must lie in (0, 1)");

  const LmiBlocks blocks = make_lmi_blocks(spec);
  const detail::LmiPencil pencil = detail::make_pencil(blocks, tau);
  const detail::BarrierProblem barrier(pencil, opts);
  constexpr double kBarrierDimension = 10.0;  // 4 + 2 + four box terms

  detail::Vec5 y = detail::Vec5::Zero();
  y(2) = 1.0;
  y(3) = 1.0;
  const double a = spec.alpha;
  if (a > 0.0 && a < 2.0 && std::min(a, 2.0 - a) > 2.0 * opts.min_p_eigenvalue) {
    // Warm start from the closed-form certificate's P and multipliers.
    const RateCertificate warm = analytic_certificate(spec);
    y(1) = a - 1.0;
    y(2) = std::clamp(warm.lambda1 / pencil.c1, 1e-8, 0.5 * barrier.cap1());
    y(3) = std::clamp(warm.lambda2 / pencil.c2, 1e-8, 0.5 * barrier.cap2());
  }
  {
    const Mat4 x = barrier.lmi(y);
    y(4) = detail::max_eigenvalue(x) + 1.0 + 0.1 * x.cwiseAbs().maxCoeff();
  }

  FeasibilityReport report;
  double best_residual = std::numeric_limits<double>::infinity();
  detail::Vec5 best_y = y;

  auto accept = [&](const detail::Vec5& point) {
    const Mat4 x = barrier.lmi(point);
    const double top = detail::max_eigenvalue(x);
    if (top < best_residual) {
      best_residual = top;
      best_y = point;
    }
    return top <= opts.search_slack * detail::certificate_scale(x);
  };

  double weight = 1.0 / (1.0 + std::abs(y(4)));
  int steps = 0;
  bool done = accept(y);
  while (!done && steps < opts.max_newton_steps && weight <= opts.max_barrier_weight) {
    // Centering.
    for (int inner = 0; inner < 60 && steps < opts.max_newton_steps; ++inner) {
      detail::Vec5 grad;
      detail::Mat5 hess;
      barrier.derivatives(y, weight, grad, hess);
      const detail::Vec5 dir = hess.ldlt().solve(-grad);
      const double decrement2 = -grad.dot(dir);
      if (!std::isfinite(decrement2)) break;
      if (decrement2 < 1e-18) break;
      const double base = barrier.value(y, weight);
      double step = 1.0;
      detail::Vec5 next = y + dir;
      int halvings = 0;
      while (halvings < 60 &&
             (!barrier.interior(next) ||
              barrier.value(next, weight) > base - 0.25 * step * decrement2)) {
        step *= 0.5;
        next = y + step * dir;
        ++halvings;
      }
      if (halvings == 60) break;
      y = next;
      ++steps;
      if (accept(y)) {
        done = true;
        break;
      }
      if (decrement2 < 1e-12) break;
    }
    if (done) break;
    report.lower_bound = std::max(report.lower_bound, y(4) - 2.0 * kBarrierDimension / weight);
    const Mat4 x = barrier.lmi(y);
    if (report.lower_bound > opts.search_slack * detail::certificate_scale(x)) break;
    weight *= opts.barrier_growth;
  }

  report.solver_iterations = steps;
  report.residual = best_residual;
  if (done) {
    report.status = FeasibilityStatus::certified;
    report.certificate = barrier.certificate(best_y, tau);
  }
  return report;
}

/// min_rate could not certify any tau < 1.
class UncertifiedError : public Error {
 public:
  UncertifiedError(const std::string& what, FeasibilityReport last)
      : Error(what), last_(std::move(last)) {}
  const FeasibilityReport& last_report() const noexcept { return last_; }

 private:
  FeasibilityReport last_;
};

/// max_alpha found nothing certifiable.
class NoCertifiableAlphaError : public Error {
 public:
  using Error::Error;
};

struct MinRateOptions {
  /// Bisection stops once (1 - lo) / (1 - hi) <= 1 + tol, which also
  /// bounds hi - lo by tol.
  double tol = 1e-4;
  /// The top probe is tau = 1 - top_gap.
  double top_gap = 1e-8;
  FeasibilityOptions feasibility{};
};

struct MinRateResult {
  double tau_star = 1.0;
  RateCertificate certificate;
  int probes = 0;
};

/// Smallest certified tau by bisection on the gap 1 - tau (geometric
/// midpoints), with find_certificate as the predicate.
inline MinRateResult min_rate(const ConditioningSpec& spec, const MinRateOptions& opts = {}) {
  spec.validate();
  if (!(opts.tol > 0.0)) throw DomainError("min_rate: tol must be positive");
  if (!(opts.top_gap > 0.0 && opts.top_gap < 1.0)) throw DomainError("min_rate: bad top_gap");

  MinRateResult out;
  double hi = 1.0 - opts.top_gap;
  FeasibilityReport top = find_certificate(spec, hi, opts.feasibility);
  out.probes = 1;
  if (!top.certified()) {
    throw UncertifiedError("min_rate: no certificate even at tau close to 1", top);
  }
  out.certificate = *top.certificate;
  double gap_hi = opts.top_gap;  // 1 - hi
  double gap_lo = 1.0;           // 1 - lo, lo = 0
  while (gap_lo / gap_hi > 1.0 + opts.tol) {
    const double gap_mid = std::sqrt(gap_lo * gap_hi);
    const double tau = 1.0 - gap_mid;
    if (!(tau > 0.0)) {
      gap_lo = gap_mid;
      continue;
    }
    FeasibilityReport r = find_certificate(spec, tau, opts.feasibility);
    ++out.probes;
    if (r.certified()) {
      gap_hi = gap_mid;
      out.certificate = *r.certificate;
    } else {
      gap_lo = gap_mid;
    }
  }
  out.tau_star = out.certificate.tau;
  return out;
}

inline MinRateResult min_rate(const ConditioningSpec& spec, double tol) {
  MinRateOptions opts;
  opts.tol = tol;
  return min_rate(spec, opts);
}

/// Rate gap used by max_alpha: alpha is certifiable when the LMI is
/// certified at tau = 1 - kCertifiableGap.
inline constexpr double kCertifiableGap = 1e-7;

inline bool alpha_certifiable(double kappa, double epsilon, double alpha,
                              const FeasibilityOptions& opts = {}) {
  return find_certificate({kappa, epsilon, alpha}, 1.0 - kCertifiableGap, opts).certified();
}

/// Largest alpha in (0, alpha_hi] for which some tau < 1 is certified,
/// to within tol.
inline double max_alpha(double kappa, double epsilon, double alpha_hi = 10.0, double tol = 1e-3) {
  if (!(alpha_hi > 0.0)) throw DomainError("max_alpha: alpha_hi must be positive");
  if (!(tol > 0.0)) throw DomainError("max_alpha: tol must be positive");
  ConditioningSpec{kappa, epsilon, 1.0}.validate();

  if (alpha_certifiable(kappa, epsilon, alpha_hi)) return alpha_hi;
  double lo = std::min(1.0, 0.5 * alpha_hi);
  while (!alpha_certifiable(kappa, epsilon, lo)) {
    if (lo <= tol) throw NoCertifiableAlphaError("max_alpha: no certifiable alpha");
    lo = std::max(0.5 * lo, tol);
  }
  double hi = alpha_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (alpha_certifiable(kappa, epsilon, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace admmcert
