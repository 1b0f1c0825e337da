#pragma once

// Over-relaxed ADMM over pluggable subproblem solvers.
//
//   minimize f(x) + g(z)  subject to  A x + B z = c
//
//   x+ = argmin f(x) + rho/2 |A x + B z - c + u|^2
//   z+ = argmin g(z) + rho/2 |alpha A x+ - (1-alpha) B z + B z' - alpha c + u|^2
//   u+ = u + alpha A x+ - (1-alpha) B z + B z+ - alpha c
//
// With alpha = 1 this is the classical iteration.

#include <admmcert/csv.hpp>
#include <admmcert/errors.hpp>
#include <admmcert/linalg.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace admmcert {

using LinearMap = std::function<Vector(const Vector&)>;
/// (v, rho) -> argmin_x f(x) + rho/2 |A x + v|^2, or the z analogue with B.
using SubproblemSolver = std::function<Vector(const Vector&, double)>;

/// f(x) = sum_i x_i' H_i x_i / 2 - h' x over a block partition of x, or a
/// single dense block together with an invertible A.
struct QuadraticObjective {
  std::vector<Matrix> blocks;
  Vector h;
  std::optional<Matrix> A;

  Eigen::Index dim() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    return n;
  }

  Vector gradient(const Vector& x) const {
    Vector g(x.size());
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      g.segment(off, b.rows()) = b * x.segment(off, b.rows());
      off += b.rows();
    }
    return g - h;
  }

  double value(const Vector& x) const {
    double v = 0.0;
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      const auto seg = x.segment(off, b.rows());
      v += 0.5 * seg.dot(b * seg);
      off += b.rows();
    }
    return v - h.dot(x);
  }

  QuadraticObjective shifted(double delta) const {
    QuadraticObjective out = *this;
    for (auto& b : out.blocks) b += delta * Matrix::Identity(b.rows(), b.cols());
    return out;
  }
};

struct ProxProblem {
  SubproblemSolver x_solver;
  SubproblemSolver z_solver;
  LinearMap A_apply;
  LinearMap B_apply;
  Vector c;
  Eigen::Index p = 0;
  Eigen::Index q = 0;
  Eigen::Index r = 0;

  /// Gradient of the normalized f at x, i.e. A^{-T} grad f(x) / rho.
  /// Present for built-in quadratic f; required by validate_dynamics.
  std::function<Vector(const Vector&, double)> f_hat_gradient;
  std::shared_ptr<const QuadraticObjective> quadratic_f;
  bool a_is_identity = false;
};

struct AdmmState {
  Vector x;
  Vector z;
  Vector u;
  long k = 0;

  static AdmmState zeros(const ProxProblem& pr) {
    return {Vector::Zero(pr.p), Vector::Zero(pr.q), Vector::Zero(pr.r), 0};
  }
};

// --------------------------------------------------------------------------
// Built-in subproblem solvers

namespace detail {

class QuadraticXSolver {
 public:
  explicit QuadraticXSolver(std::shared_ptr<const QuadraticObjective> f) : f_(std::move(f)) {
    if (f_->A && f_->blocks.size() != 1) {
      throw DimensionError("quadratic x-solver: a general A needs a single block");
    }
  }

  Vector operator()(const Vector& v, double rho) const {
    const auto factors = factorization(rho);
    if (!f_->A) {
      Vector x(f_->dim());
      Eigen::Index off = 0;
      for (std::size_t i = 0; i < f_->blocks.size(); ++i) {
        const Eigen::Index n = f_->blocks[i].rows();
        x.segment(off, n) = (*factors)[i].solve(f_->h.segment(off, n) - rho * v.segment(off, n));
        off += n;
      }
      return x;
    }
    const Matrix& a = *f_->A;
    return (*factors)[0].solve(f_->h - rho * (a.transpose() * v));
  }

 private:
  using Factors = std::vector<Eigen::LLT<Matrix>>;

  std::shared_ptr<const Factors> factorization(double rho) const {
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = cache_->find(rho);
    if (it != cache_->end()) return it->second;
    auto factors = std::make_shared<Factors>();
    for (const auto& b : f_->blocks) {
      Matrix k = b;
      if (f_->A) {
        k += rho * f_->A->transpose() * *f_->A;
      } else {
        k += rho * Matrix::Identity(b.rows(), b.cols());
      }
      factors->emplace_back(k);
      if (factors->back().info() != Eigen::Success) {
        throw DomainError("quadratic x-solver: system is not positive definite");
      }
    }
    if (cache_->size() > 64) cache_->clear();
    return cache_->emplace(rho, std::move(factors)).first->second;
  }

  std::shared_ptr<const QuadraticObjective> f_;
  std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
  std::shared_ptr<std::map<double, std::shared_ptr<const Factors>>> cache_ =
      std::make_shared<std::map<double, std::shared_ptr<const Factors>>>();
};

}  // namespace detail

inline Vector soft_threshold(const Vector& w, double t) {
  return w.unaryExpr([t](double v) {
    const double mag = std::max(std::abs(v) - t, 0.0);
    return v >= 0.0 ? mag : -mag;
  });
}

/// z-solver for g(z) = weight |z|_1 with B = -[I; ...; I] (copies blocks).
/// argmin weight |z|_1 + rho/2 |w - E z|^2 = soft(mean of blocks of w, weight / (copies rho)).
inline SubproblemSolver l1_consensus_z_solver(Eigen::Index copies, Eigen::Index dim,
                                              double weight = 1.0) {
  return [copies, dim, weight](const Vector& w, double rho) {
    if (w.size() != copies * dim) throw DimensionError("l1 z-solver: bad input size");
    Vector mean = Vector::Zero(dim);
    for (Eigen::Index i = 0; i < copies; ++i) mean += w.segment(i * dim, dim);
    mean /= static_cast<double>(copies);
    return soft_threshold(mean, weight / (static_cast<double>(copies) * rho));
  };
}

/// z-solver for g(z) = delta |z|^2 / 2 with B = -I.
inline SubproblemSolver quadratic_z_solver(double delta) {
  return [delta](const Vector& w, double rho) -> Vector { return (rho / (delta + rho)) * w; };
}

inline LinearMap identity_map() {
  return [](const Vector& v) { return v; };
}

inline LinearMap negated_identity_map() {
  return [](const Vector& v) -> Vector { return -v; };
}

/// z -> -[z; z; ...; z].
inline LinearMap negated_stack_map(Eigen::Index copies) {
  return [copies](const Vector& z) {
    Vector out(copies * z.size());
    for (Eigen::Index i = 0; i < copies; ++i) out.segment(i * z.size(), z.size()) = -z;
    return out;
  };
}

inline LinearMap matrix_map(Matrix m) {
  return [m = std::move(m)](const Vector& v) -> Vector { return m * v; };
}

/// Problem with built-in quadratic f. A is the identity unless f.A is set.
inline ProxProblem quadratic_f_problem(std::shared_ptr<const QuadraticObjective> f,
                                       SubproblemSolver z_solver, LinearMap B_apply,
                                       Eigen::Index q, Vector c) {
  ProxProblem pr;
  pr.p = f->dim();
  pr.r = c.size();
  pr.q = q;
  pr.c = std::move(c);
  pr.x_solver = detail::QuadraticXSolver(f);
  pr.z_solver = std::move(z_solver);
  pr.B_apply = std::move(B_apply);
  pr.quadratic_f = f;
  if (f->A) {
    pr.A_apply = matrix_map(*f->A);
    const Matrix a_inv_t = f->A->transpose().inverse();
    pr.f_hat_gradient = [f, a_inv_t](const Vector& x, double rho) -> Vector {
      return a_inv_t * f->gradient(x) / rho;
    };
  } else {
    pr.a_is_identity = true;
    pr.A_apply = identity_map();
    pr.f_hat_gradient = [f](const Vector& x, double rho) -> Vector { return f->gradient(x) / rho; };
  }
  return pr;
}

/// Adds delta |x|^2 / 2 to f. Only the x-update changes.
inline ProxProblem regularize(const ProxProblem& problem, double delta) {
  if (!(delta >= 0.0)) throw DomainError("regularize: delta must be >= 0");
  if (delta == 0.0) return problem;
  ProxProblem out = problem;
  if (problem.quadratic_f) {
    auto f = std::make_shared<const QuadraticObjective>(problem.quadratic_f->shifted(delta));
    ProxProblem rebuilt = quadratic_f_problem(f, problem.z_solver, problem.B_apply, problem.q,
                                              problem.c);
    return rebuilt;
  }
  if (!problem.a_is_identity) {
    throw UnsupportedError("regularize: needs quadratic f or A = I");
  }
  // delta/2 |x|^2 + rho/2 |x + v|^2 = (rho+delta)/2 |x + rho v / (rho+delta)|^2 + const
  auto inner = problem.x_solver;
  out.x_solver = [inner, delta](const Vector& v, double rho) {
    return inner((rho / (rho + delta)) * v, rho + delta);
  };
  if (problem.f_hat_gradient) {
    auto grad = problem.f_hat_gradient;
    out.f_hat_gradient = [grad, delta](const Vector& x, double rho) -> Vector {
      return grad(x, rho) + (delta / rho) * x;
    };
  }
  return out;
}

// --------------------------------------------------------------------------
// Iteration

/// One over-relaxed step.
inline AdmmState admm_step(const ProxProblem& pr, const AdmmState& s, double rho, double alpha) {
  if (s.x.size() != pr.p || s.z.size() != pr.q || s.u.size() != pr.r) {
    throw DimensionError("admm_step: state dimensions do not match the problem");
  }
  AdmmState next;
  next.k = s.k + 1;
  try {
    const Vector bz = pr.B_apply(s.z);
    next.x = pr.x_solver(bz - pr.c + s.u, rho);
    const Vector mix = alpha * pr.A_apply(next.x) - (1.0 - alpha) * bz;
    next.z = pr.z_solver(mix - alpha * pr.c + s.u, rho);
    next.u = s.u + mix + pr.B_apply(next.z) - alpha * pr.c;
  } catch (const DimensionError&) {
    throw;
  } catch (const std::exception& e) {
    throw SubproblemError(std::string("admm_step: subproblem failed: ") + e.what(), s.k);
  }
  if (next.x.size() != pr.p || next.z.size() != pr.q) {
    throw SubproblemError("admm_step: subproblem returned wrong dimension", s.k);
  }
  return next;
}

/// phi* = (z*, u*) or just z*.
struct Reference {
  Vector z;
  std::optional<Vector> u;

  double distance(const AdmmState& s) const {
    double d = (s.z - z).squaredNorm();
    if (u) d += (s.u - *u).squaredNorm();
    return std::sqrt(d);
  }
};

struct StoppingRule {
  long max_iters = 100000;
  /// Stop when |Ax + Bz - c| and |B(z_k - z_{k-1})| are both at most this.
  double residual_tol = 1e-10;
  std::optional<Reference> reference;
  /// Stop when the distance to the reference is at most this.
  double reference_tol = 0.0;
  bool record_iterates = true;
};

inline constexpr double kDivergenceNorm = 1e12;

struct TraceRecord {
  long k = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double dist_to_reference = std::numeric_limits<double>::quiet_NaN();
  // Iterates in normalized coordinates; empty unless recorded.
  Vector r;  // A x_k
  Vector s;  // B z_k
  Vector u;
  Vector z;
  Vector beta;  // gradient of normalized f at r_k, when available
};

struct NormalizedTrace {
  double rho = 0.0;
  double alpha = 1.0;
  Vector c;
  std::vector<TraceRecord> records;  // records[0] is the initial state
};

struct RunResult {
  AdmmState state;
  NormalizedTrace trace;
};

/// Runs until the stopping rule fires or max_iters steps have been taken.
inline RunResult run(const ProxProblem& pr, double rho, double alpha, const StoppingRule& stop,
                     AdmmState init) {
  if (!(rho > 0.0)) throw DomainError("run: rho must be positive");
  RunResult out;
  out.trace.rho = rho;
  out.trace.alpha = alpha;
  out.trace.c = pr.c;

  auto record = [&](const AdmmState& s, const Vector* z_prev) {
    TraceRecord rec;
    rec.k = s.k;
    const Vector ax = pr.A_apply(s.x);
    const Vector bz = pr.B_apply(s.z);
    rec.primal_residual = (ax + bz - pr.c).norm();
    rec.dual_residual = z_prev ? (bz - pr.B_apply(*z_prev)).norm()
                               : std::numeric_limits<double>::infinity();
    if (stop.reference) rec.dist_to_reference = stop.reference->distance(s);
    if (stop.record_iterates) {
      rec.r = ax;
      rec.s = bz;
      rec.u = s.u;
      rec.z = s.z;
      if (pr.f_hat_gradient) rec.beta = pr.f_hat_gradient(s.x, rho);
    }
    out.trace.records.push_back(std::move(rec));
  };
  auto should_stop = [&](const TraceRecord& rec) {
    if (rec.primal_residual <= stop.residual_tol && rec.dual_residual <= stop.residual_tol) {
      return true;
    }
    return stop.reference && rec.dist_to_reference <= stop.reference_tol;
  };

  AdmmState state = std::move(init);
  record(state, nullptr);
  while (!should_stop(out.trace.records.back()) && state.k < stop.max_iters) {
    AdmmState next = admm_step(pr, state, rho, alpha);
    const double size = std::sqrt(next.x.squaredNorm() + next.z.squaredNorm() + next.u.squaredNorm());
    if (!(size <= kDivergenceNorm)) {
      throw DivergenceError("run: iterates diverged", next.k);
    }
    record(next, &state.z);
    state = std::move(next);
  }
  out.state = std::move(state);
  return out;
}

inline RunResult run(const ProxProblem& pr, double rho, double alpha, const StoppingRule& stop) {
  return run(pr, rho, alpha, stop, AdmmState::zeros(pr));
}

/// Largest violation of the normalized state-space recursion
///   r_{k+1} = -s_k - u_k + c - beta_{k+1}
///   s_{k+1} = s_k - (1-alpha) u_k + alpha beta_{k+1} - gamma_{k+1}
///   u_{k+1} = -gamma_{k+1}
/// with gamma_k = -u_k.
inline double validate_dynamics(const NormalizedTrace& trace, double alpha) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const TraceRecord& now = trace.records[k];
    const TraceRecord& nxt = trace.records[k + 1];
    if (nxt.beta.size() == 0 || nxt.r.size() == 0) {
      throw UnsupportedError("validate_dynamics: trace lacks gradients of a quadratic f");
    }
    const Vector gamma_next = -nxt.u;
    const double e1 = (nxt.r + now.s + now.u - trace.c + nxt.beta).lpNorm<Eigen::Infinity>();
    const double e2 =
        (nxt.s - now.s + (1.0 - alpha) * now.u - alpha * nxt.beta + gamma_next).lpNorm<Eigen::Infinity>();
    const double e3 = (nxt.u + gamma_next).lpNorm<Eigen::Infinity>();
    worst = std::max({worst, e1, e2, e3});
  }
  return worst;
}

/// exp of the least-squares slope of log d_k against k over the last half
/// of the sequence.
inline double empirical_rate(const std::vector<double>& distances) {
  if (distances.size() < 21) throw EstimationError("empirical_rate: need at least 20 iterations");
  const double d0 = distances.front();
  if (!(d0 > 0.0)) throw EstimationError("empirical_rate: zero initial error");
  const double dmin = *std::min_element(distances.begin(), distances.end());
  if (!(dmin <= 1e-3 * d0)) throw EstimationError("empirical_rate: insufficient decrease");

  const std::size_t start = distances.size() / 2;
  double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
  double n = 0.0;
  for (std::size_t k = start; k < distances.size(); ++k) {
    if (!(distances[k] > 0.0)) continue;
    const double y = std::log(distances[k]);
    const double x = static_cast<double>(k);
    sk += x;
    sy += y;
    skk += x * x;
    sky += x * y;
    n += 1.0;
  }
  if (n < 2.0) throw EstimationError("empirical_rate: too few positive distances");
  const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  return std::exp(slope);
}

/// Rate of |phi_k - phi*| with phi = (z, u).
inline double empirical_rate(const NormalizedTrace& trace, const Vector& z_ref, const Vector& u_ref) {
  std::vector<double> d;
  d.reserve(trace.records.size());
  for (const auto& rec : trace.records) {
    if (rec.z.size() == 0) throw EstimationError("empirical_rate: trace has no iterates");
    d.push_back(std::sqrt((rec.z - z_ref).squaredNorm() + (rec.u - u_ref).squaredNorm()));
  }
  return empirical_rate(d);
}

/// CSV: k,primal_residual,dual_residual,dist_to_reference.
inline void write_trace_csv(std::ostream& os, const NormalizedTrace& trace) {
  os << "k,primal_residual,dual_residual,dist_to_reference\n";
  for (const auto& rec : trace.records) {
    os << rec.k << ',' << format_real(rec.primal_residual) << ','
       << (std::isfinite(rec.dual_residual) ? format_real(rec.dual_residual) : std::string(kMissing))
       << ',' << format_real(rec.dist_to_reference) << '\n';
  }
}

}  // namespace admmcert
