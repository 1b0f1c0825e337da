#include <admmcert/lasso.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <tuple>

using namespace admmcert;

namespace {

LassoInstance small_instance(std::uint64_t seed = 5) {
  return generate_instance(30, 20, 3, 0.1, 6, std::sqrt(1e-3), seed);
}

// Subgradient optimality of z for sum_i |A_i z - b_i|^2 / (2 mu) + |z|_1.
double optimality_violation(const LassoInstance& inst, const Vector& z) {
  Vector grad = Vector::Zero(inst.p());
  for (const auto& blk : inst.blocks) grad += blk.A.transpose() * (blk.A * z - blk.b) / inst.mu;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) != 0.0) {
      worst = std::max(worst, std::abs(grad(i) + (z(i) > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(grad(i)) - 1.0);
    }
  }
  return worst;
}

}  // namespace

TEST(SeededRng, PortableDraws) {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  SeededRng c(7);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = c.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(c.below(7), 7u);
}

TEST(GenerateInstance, DeterministicBitForBit) {
  const LassoInstance a = small_instance(9);
  const LassoInstance b = small_instance(9);
  ASSERT_EQ(a.N(), b.N());
  for (Eigen::Index i = 0; i < a.N(); ++i) {
    EXPECT_EQ(a.blocks[static_cast<std::size_t>(i)].A, b.blocks[static_cast<std::size_t>(i)].A);
    EXPECT_EQ(a.blocks[static_cast<std::size_t>(i)].b, b.blocks[static_cast<std::size_t>(i)].b);
  }
  EXPECT_EQ(a.x0, b.x0);
  EXPECT_NE(small_instance(10).x0, a.x0);
}

TEST(GenerateInstance, Recipe) {
  const LassoInstance inst = generate_instance(40, 25, 4, 0.1, 7, 0.0, 3);
  EXPECT_EQ(inst.N(), 4);
  EXPECT_EQ(inst.p(), 25);
  EXPECT_EQ((inst.x0.array() != 0.0).count(), 7);
  for (const auto& blk : inst.blocks) {
    EXPECT_EQ(blk.A.rows(), 40);
    for (Eigen::Index j = 0; j < blk.A.cols(); ++j) EXPECT_NEAR(blk.A.col(j).norm(), 1.0, 1e-14);
    EXPECT_LE((blk.A * inst.x0 - blk.b).norm(), 1e-14);
  }
}

TEST(GenerateInstance, Preconditions) {
  EXPECT_THROW(generate_instance(10, 20, 2, 0.1, 5, 0.0, 1), DomainError);
  EXPECT_THROW(generate_instance(20, 10, 2, 0.1, 11, 0.0, 1), DomainError);
  EXPECT_THROW(generate_instance(20, 10, 2, 0.0, 1, 0.0, 1), DomainError);
  EXPECT_THROW(generate_instance(20, 10, 0, 0.1, 1, 0.0, 1), DomainError);
}

TEST(Conditioning, IdentityBlocks) {
  LassoInstance inst;
  inst.mu = 1.0;
  for (int i = 0; i < 3; ++i) inst.blocks.push_back({Matrix::Identity(4, 4), Vector::Zero(4)});
  const LassoConditioning c = conditioning(inst);
  EXPECT_NEAR(c.m, 1.0, 1e-12);
  EXPECT_NEAR(c.L, 1.0, 1e-12);
  EXPECT_NEAR(c.kappa, 1.0, 1e-12);
}

TEST(Conditioning, ScalesWithMu) {
  LassoInstance inst = small_instance();
  const LassoConditioning a = conditioning(inst);
  inst.mu *= 0.5;
  const LassoConditioning b = conditioning(inst);
  EXPECT_NEAR(b.m, 2.0 * a.m, 1e-9 * a.m);
  EXPECT_NEAR(b.L, 2.0 * a.L, 1e-9 * a.L);
  EXPECT_NEAR(b.kappa, a.kappa, 1e-9 * a.kappa);
}

TEST(Conditioning, BoundsRayleighQuotients) {
  const LassoInstance inst = small_instance();
  const LassoConditioning c = conditioning(inst);
  SeededRng rng(11);
  for (int s = 0; s < 100; ++s) {
    Vector v(inst.N() * inst.p());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
    v.normalize();
    double q = 0.0;
    for (Eigen::Index i = 0; i < inst.N(); ++i) {
      const auto seg = v.segment(i * inst.p(), inst.p());
      q += (inst.blocks[static_cast<std::size_t>(i)].A * seg).squaredNorm() / inst.mu;
    }
    EXPECT_GE(q, c.m * (1.0 - 1e-9));
    EXPECT_LE(q, c.L * (1.0 + 1e-9));
  }
}

TEST(Conditioning, RankDeficientBlock) {
  LassoInstance inst;
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = 1.0;
  a(1, 0) = 1.0;
  inst.blocks.push_back({a, Vector::Zero(3)});
  EXPECT_THROW(conditioning(inst), DomainError);
}

TEST(ReferenceSolution, ZeroData) {
  const LassoInstance inst = generate_instance(30, 20, 3, 0.1, 0, 0.0, 4);
  const Vector z = reference_solution(inst);
  EXPECT_EQ(z.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(ReferenceSolution, SatisfiesOptimality) {
  const LassoInstance inst = small_instance();
  const Vector z = reference_solution(inst);
  EXPECT_LE(optimality_violation(inst, z), 1e-7);
  EXPECT_THROW(reference_solution(inst, {0.0, 10}), DomainError);
  EXPECT_THROW(reference_solution(inst, {1e-14, 3}), ConvergenceError);
}

TEST(ReferenceSolution, AgreesWithAdmm) {
  const LassoInstance inst = small_instance();
  const Vector z_star = reference_solution(inst);
  StoppingRule stop;
  stop.residual_tol = 1e-10;
  stop.record_iterates = false;
  const RunResult r = run(lasso_problem(inst), 2.0, 1.5, stop);
  const Vector& z = r.state.z;
  EXPECT_LE((z - z_star).lpNorm<Eigen::Infinity>(), 1e-5);
  const double fz = lasso_objective(inst, z);
  EXPECT_LE(lasso_objective(inst, z_star), fz + 1e-8 * (1.0 + std::abs(fz)));
}

TEST(LassoProblem, DualReferenceIsAFixedPoint) {
  const LassoInstance inst = small_instance();
  const Vector z_star = reference_solution(inst, {1e-13, 1000000});
  const double rho = 1.3;
  const ProxProblem pr = lasso_problem(inst);
  AdmmState s;
  s.z = z_star;
  s.u = lasso_dual_reference(inst, z_star, rho);
  s.x = Vector(inst.N() * inst.p());
  for (Eigen::Index i = 0; i < inst.N(); ++i) s.x.segment(i * inst.p(), inst.p()) = z_star;
  const AdmmState next = admm_step(pr, s, rho, 1.4);
  EXPECT_LE((next.z - s.z).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_LE((next.u - s.u).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(InferEpsilon, RoundTrip) {
  const LassoConditioning c{0.5, 50.0, 100.0};
  EXPECT_NEAR(infer_epsilon(5.0, c), 0.0, 1e-15);
  EXPECT_NEAR(infer_epsilon(50.0, c), 0.5, 1e-15);
  EXPECT_EQ(infer_epsilon(3.0, {1.0, 1.0, 1.0}), 0.0);
}

TEST(RunGrid, ZeroBudgetHasNoIterations) {
  const LassoInstance inst = small_instance();
  const Vector z_star = reference_solution(inst);
  const auto rows = run_grid(inst, z_star, {1.0, 1.5}, {0.5, 2.0}, 1e-6, 0);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& g : rows) {
    EXPECT_FALSE(g.iterations_to_tol.has_value());
    EXPECT_NEAR(g.final_error, z_star.norm(), 1e-15);
  }
}

TEST(RunGrid, SortedInvariantAndDeterministic) {
  const LassoInstance inst = small_instance();
  const Vector z_star = reference_solution(inst);
  const std::vector<double> alphas{1.8, 0.5, 1.0, 2.6};
  const std::vector<double> rhos{4.0, 0.3, 1.0};
  GridOptions serial;
  serial.threads = 1;
  GridOptions pooled;
  pooled.threads = 3;
  const auto a = run_grid(inst, z_star, alphas, rhos, 1e-6, 400, serial);
  const auto b = run_grid(inst, z_star, alphas, rhos, 1e-6, 400, pooled);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_TRUE(std::tie(a[i - 1].alpha, a[i - 1].rho) < std::tie(a[i].alpha, a[i].rho));
  }
  bool any_certified = false;
  bool any_absent = false;
  for (const auto& g : a) {
    if (g.iterations_to_tol) EXPECT_LE(g.final_error, 1e-6);
    any_certified = any_certified || g.certified_tau.has_value();
    any_absent = any_absent || !g.certified_tau.has_value();
  }
  EXPECT_TRUE(any_certified);
  EXPECT_TRUE(any_absent);  // alpha = 2.6 is beyond the certifiable range here
  std::ostringstream sa, sb;
  write_grid_csv(sa, a);
  write_grid_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "alpha,rho,certified_tau,iterations,final_error");
  EXPECT_NE(sa.str().find(",NA,"), std::string::npos);
  EXPECT_THROW(run_grid(inst, z_star, alphas, rhos, 0.0, 10), DomainError);
}

TEST(RunGrid, CertifiedRateBoundsEmpiricalRate) {
  const LassoInstance inst = small_instance();
  const Vector z_star = reference_solution(inst, {1e-13, 1000000});
  const LassoConditioning cond = conditioning(inst);
  const ProxProblem pr = lasso_problem(inst);
  int checked = 0;
  for (double alpha : {0.5, 1.0, 1.5, 1.9}) {
    for (double rho : {0.3, 1.0, 3.0}) {
      MinRateResult cert;
      try {
        cert = min_rate({cond.kappa, infer_epsilon(rho, cond), alpha});
      } catch (const UncertifiedError&) {
        continue;
      }
      const Vector u_star = lasso_dual_reference(inst, z_star, rho);
      StoppingRule stop;
      stop.residual_tol = 0.0;
      stop.max_iters = 20000;
      stop.reference = Reference{z_star, u_star};
      stop.reference_tol = 1e-9;
      const RunResult r = run(pr, rho, alpha, stop);
      const double rate = empirical_rate(r.trace, z_star, u_star);
      EXPECT_LE(rate, cert.tau_star + 5e-3) << "alpha=" << alpha << " rho=" << rho;
      ++checked;
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(RunGrid, SmallerAlphaIsMoreRobustToRho) {
  const LassoInstance inst = generate_instance(120, 100, 5, 0.1, 50, std::sqrt(1e-3), 1);
  const Vector z_star = reference_solution(inst);
  const std::vector<double> alphas{0.5, 1.0, 1.5, 2.0};
  const std::vector<double> rhos = geomspace(0.1, 10.0, 20);
  const auto rows = run_grid(inst, z_star, alphas, rhos, 1e-6, 1000);
  std::vector<int> width;
  for (double a : alphas) {
    long best = -1;
    for (const auto& g : rows) {
      if (g.alpha == a && g.iterations_to_tol && (best < 0 || *g.iterations_to_tol < best)) {
        best = *g.iterations_to_tol;
      }
    }
    ASSERT_GT(best, 0);
    int w = 0;
    for (const auto& g : rows) {
      if (g.alpha == a && g.iterations_to_tol && *g.iterations_to_tol <= 2 * best) ++w;
    }
    width.push_back(w);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < width.size(); ++i) inversions += width[i] > width[i - 1];
  EXPECT_LE(inversions, 1) << width[0] << ' ' << width[1] << ' ' << width[2] << ' ' << width[3];
}

TEST(Grids, Spacing) {
  const auto l = linspace(0.1, 2.2, 22);
  EXPECT_EQ(l.size(), 22u);
  EXPECT_NEAR(l[1] - l[0], 0.1, 1e-15);
  const auto g = geomspace(0.1, 10.0, 3);
  EXPECT_NEAR(g[1], 1.0, 1e-15);
  EXPECT_TRUE(linspace(0.0, 1.0, 0).empty());
  EXPECT_EQ(geomspace(2.0, 5.0, 1).size(), 1u);
}
