#pragma once

// Distributed Lasso bench:
//
//   minimize sum_i |A_i x_i - b_i|^2 / (2 mu) + |z|_1   s.t.  x_i = z
//
// in consensus form: x stacked, A = I, B = -[I; ...; I], c = 0.

#include <admmcert/admm.hpp>
#include <admmcert/csv.hpp>
#include <admmcert/errors.hpp>
#include <admmcert/feasibility.hpp>
#include <admmcert/linalg.hpp>
#include <admmcert/parallel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <tuple>
#include <string>
#include <string_view>
#include <vector>

namespace admmcert {

/// mt19937_64 with portable uniform and Box-Muller normal draws, so a seed
/// gives the same bits on every standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1), 53 random bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct LassoBlock {
  Matrix A;
  Vector b;
};

struct LassoInstance {
  std::vector<LassoBlock> blocks;
  double mu = 0.1;
  std::uint64_t seed = 0;
  Vector x0;  // planted signal

  Eigen::Index N() const { return static_cast<Eigen::Index>(blocks.size()); }
  Eigen::Index p() const { return blocks.empty() ? 0 : blocks.front().A.cols(); }
};

struct LassoConditioning {
  double m;
  double L;
  double kappa;
};

/// m = min_i lambda_min(A_i'A_i) / mu, L = max_i lambda_max(A_i'A_i) / mu.
inline LassoConditioning conditioning(const LassoInstance& inst) {
  if (inst.blocks.empty()) throw DomainError("conditioning: no blocks");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& blk : inst.blocks) {
    const SymMatrix gram(Matrix(blk.A.transpose() * blk.A));
    const ExtremeEigs e = extreme_eigs(gram, 1e-10);
    lo = std::min(lo, e.min);
    hi = std::max(hi, e.max);
  }
  if (!(lo > 1e-12 * hi)) throw DomainError("conditioning: a block is rank deficient");
  const double m = lo / inst.mu;
  const double L = hi / inst.mu;
  return {m, L, L / m};
}

/// Column-normalized Gaussian blocks, b_i = A_i x0 + noise, x0 with nnz
/// standard normal entries at uniformly chosen positions. Retries with
/// seed + 1, seed + 2 on rank deficiency.
inline LassoInstance generate_instance(Eigen::Index n, Eigen::Index p, Eigen::Index N, double mu,
                                       Eigen::Index nnz, double noise_std, std::uint64_t seed) {
  if (!(n >= p && p >= nnz && nnz >= 0 && p >= 1 && N >= 1)) {
    throw DomainError("generate_instance: need n >= p >= nnz >= 0, p >= 1, N >= 1");
  }
  if (!(mu > 0.0) || !(noise_std >= 0.0)) throw DomainError("generate_instance: bad mu or noise");

  for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
    SeededRng rng(seed + attempt);
    LassoInstance inst;
    inst.mu = mu;
    inst.seed = seed + attempt;

    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < nnz; ++i) {
      const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    inst.x0 = Vector::Zero(p);
    for (Eigen::Index i = 0; i < nnz; ++i) inst.x0(idx[static_cast<std::size_t>(i)]) = rng.normal();

    for (Eigen::Index blk = 0; blk < N; ++blk) {
      LassoBlock b;
      b.A.resize(n, p);
      for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) b.A(i, j) = rng.normal();
      }
      for (Eigen::Index j = 0; j < p; ++j) b.A.col(j).normalize();
      b.b = b.A * inst.x0;
      for (Eigen::Index i = 0; i < n; ++i) b.b(i) += noise_std * rng.normal();
      inst.blocks.push_back(std::move(b));
    }
    try {
      (void)conditioning(inst);
      return inst;
    } catch (const DomainError&) {
      continue;
    }
  }
  throw DomainError("generate_instance: rank deficient after 3 seeds");
}

inline double lasso_objective(const LassoInstance& inst, const Vector& z) {
  double v = z.lpNorm<1>();
  for (const auto& blk : inst.blocks) v += (blk.A * z - blk.b).squaredNorm() / (2.0 * inst.mu);
  return v;
}

/// The instance in consensus ADMM form.
inline ProxProblem lasso_problem(const LassoInstance& inst) {
  auto f = std::make_shared<QuadraticObjective>();
  const Eigen::Index p = inst.p();
  f->h.resize(inst.N() * p);
  for (Eigen::Index i = 0; i < inst.N(); ++i) {
    const auto& blk = inst.blocks[static_cast<std::size_t>(i)];
    f->blocks.push_back(blk.A.transpose() * blk.A / inst.mu);
    f->h.segment(i * p, p) = blk.A.transpose() * blk.b / inst.mu;
  }
  return quadratic_f_problem(f, l1_consensus_z_solver(inst.N(), p), negated_stack_map(inst.N()), p,
                             Vector::Zero(inst.N() * p));
}

/// Scaled dual at the optimum: u* = -grad f(x*) / rho with x* = (z*, ..., z*).
inline Vector lasso_dual_reference(const LassoInstance& inst, const Vector& z_star, double rho) {
  const Eigen::Index p = inst.p();
  Vector u(inst.N() * p);
  for (Eigen::Index i = 0; i < inst.N(); ++i) {
    const auto& blk = inst.blocks[static_cast<std::size_t>(i)];
    u.segment(i * p, p) = -(blk.A.transpose() * (blk.A * z_star - blk.b)) / (inst.mu * rho);
  }
  return u;
}

struct ReferenceOptions {
  double tol = 1e-10;
  long max_iters = 1000000;
};

/// Accelerated proximal gradient with gradient-based restart, step 1/L_s
/// where L_s = lambda_max(sum_i A_i'A_i) / mu. Stops when the prox-gradient
/// fixed-point residual |z - prox(z - grad/L_s)| is at most tol.
inline Vector reference_solution(const LassoInstance& inst, const ReferenceOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw DomainError("reference_solution: tol must be positive");
  const Eigen::Index p = inst.p();
  Matrix H = Matrix::Zero(p, p);
  Vector h = Vector::Zero(p);
  for (const auto& blk : inst.blocks) {
    H += blk.A.transpose() * blk.A;
    h += blk.A.transpose() * blk.b;
  }
  H /= inst.mu;
  h /= inst.mu;
  const double lip = extreme_eigs(SymMatrix(H), 1e-8).max * (1.0 + 1e-8);
  const double step = 1.0 / lip;

  auto prox_grad = [&](const Vector& y) { return soft_threshold(y - step * (H * y - h), step); };

  Vector x = Vector::Zero(p);
  Vector y = x;
  double t = 1.0;
  for (long it = 0; it < opts.max_iters; ++it) {
    const Vector x_next = prox_grad(y);
    if ((y - x_next).dot(x_next - x) > 0.0) {
      // Momentum points uphill: drop it and restart from x_next.
      t = 1.0;
      x = x_next;
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      x = x_next;
      t = t_next;
    }
    if ((x - prox_grad(x)).norm() <= opts.tol) return x;
  }
  throw ConvergenceError("reference_solution: iteration budget exhausted", 0.0, 0.0);
}

struct GridResult {
  double alpha = 0.0;
  double rho = 0.0;
  std::optional<double> certified_tau;
  std::optional<long> iterations_to_tol;
  double final_error = 0.0;
};

/// Step-size exponent of rho relative to sqrt(m L).
inline double infer_epsilon(double rho, const LassoConditioning& cond) {
  if (cond.kappa <= 1.0) return 0.0;
  return std::log(rho / std::sqrt(cond.m * cond.L)) / std::log(cond.kappa);
}

struct GridOptions {
  MinRateOptions certification{};
  unsigned threads = sweep_threads();
};

/// Certifies and runs every (alpha, rho) pair. Results are sorted by
/// (alpha, rho) regardless of evaluation order.
inline std::vector<GridResult> run_grid(const LassoInstance& inst, const Vector& z_star,
                                        const std::vector<double>& alphas,
                                        const std::vector<double>& rhos, double target, long budget,
                                        const GridOptions& opts = {}) {
  if (!(target > 0.0)) throw DomainError("run_grid: target must be positive");
  if (budget < 0) throw DomainError("run_grid: budget must be >= 0");
  const LassoConditioning cond = conditioning(inst);
  const ProxProblem problem = lasso_problem(inst);

  std::vector<std::pair<double, double>> points;
  for (double a : alphas) {
    for (double r : rhos) points.emplace_back(a, r);
  }
  std::sort(points.begin(), points.end());
  std::vector<GridResult> results(points.size());

  parallel_for(
      points.size(),
      [&](std::size_t i) {
        const auto [alpha, rho] = points[i];
        GridResult g;
        g.alpha = alpha;
        g.rho = rho;
        try {
          g.certified_tau =
              min_rate({cond.kappa, infer_epsilon(rho, cond), alpha}, opts.certification).tau_star;
        } catch (const UncertifiedError&) {
          g.certified_tau.reset();
        }
        StoppingRule stop;
        stop.max_iters = budget;
        stop.residual_tol = 0.0;
        stop.reference = Reference{z_star, std::nullopt};
        stop.reference_tol = target;
        stop.record_iterates = false;
        try {
          const RunResult res = run(problem, rho, alpha, stop);
          g.final_error = res.trace.records.back().dist_to_reference;
          if (g.final_error <= target) g.iterations_to_tol = res.state.k;
        } catch (const DivergenceError&) {
          g.final_error = std::numeric_limits<double>::infinity();
        }
        results[i] = g;
      },
      opts.threads);
  return results;
}

/// Header alpha,rho,certified_tau,iterations,final_error; rows by (alpha, rho).
inline void write_grid_csv(std::ostream& os, std::vector<GridResult> rows) {
  std::sort(rows.begin(), rows.end(), [](const GridResult& a, const GridResult& b) {
    return std::tie(a.alpha, a.rho) < std::tie(b.alpha, b.rho);
  });
  os << "alpha,rho,certified_tau,iterations,final_error\n";
  for (const auto& g : rows) {
    os << format_real(g.alpha) << ',' << format_real(g.rho) << ',' << format_real(g.certified_tau)
       << ',' << format_count(g.iterations_to_tol) << ',' << format_real(g.final_error) << '\n';
  }
}

/// Grid point with the smallest certified rate (first in (alpha, rho) order on ties).
inline std::optional<GridResult> best_certified(const std::vector<GridResult>& rows) {
  std::optional<GridResult> best;
  for (const auto& g : rows) {
    if (!g.certified_tau) continue;
    if (!best || *g.certified_tau < *best->certified_tau) best = g;
  }
  return best;
}

/// Grid point with the fewest iterations to the target.
inline std::optional<GridResult> best_empirical(const std::vector<GridResult>& rows) {
  std::optional<GridResult> best;
  for (const auto& g : rows) {
    if (!g.iterations_to_tol) continue;
    if (!best || *g.iterations_to_tol < *best->iterations_to_tol) best = g;
  }
  return best;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i) out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

inline std::vector<double> geomspace(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {lo};
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(a + (b - a) * i / (count - 1)));
  return out;
}

/// Instance size and default sweep grid for a named scale.
struct LassoProfile {
  Eigen::Index n, p, N, nnz;
  double mu, noise_std;
  int alpha_count, rho_count;

  std::vector<double> alphas() const { return linspace(0.1, 2.2, alpha_count); }
  std::vector<double> rhos() const { return geomspace(0.1, 10.0, rho_count); }
  LassoInstance instance(std::uint64_t seed) const {
    return generate_instance(n, p, N, mu, nnz, noise_std, seed);
  }
};

/// "desk": 5 blocks of 120 x 100 on a 22 x 20 grid. "paper": 5 blocks of
/// 600 x 500 on an 85 x 50 grid.
inline LassoProfile lasso_profile(std::string_view scale) {
  const double noise = std::sqrt(1e-3);
  if (scale == "desk") return {120, 100, 5, 50, 0.1, noise, 22, 20};
  if (scale == "paper") return {600, 500, 5, 250, 0.1, noise, 85, 50};
  throw DomainError("lasso_profile: unknown scale " + std::string(scale));
}

}  // namespace admmcert
