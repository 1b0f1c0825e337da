#include <admmcert/feasibility.hpp>
#include <admmcert/quadratic.hpp>

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace admmcert;

namespace {

Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

QuadraticInstance random_instance(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> nd;
  Matrix g(d + 2, d);
  for (Eigen::Index i = 0; i < d + 2; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = nd(rng);
  }
  std::uniform_real_distribution<double> unif(0.1, 3.0);
  return {SymMatrix(Matrix(g.transpose() * g + 0.1 * Matrix::Identity(d, d))), unif(rng), unif(rng),
          unif(rng)};
}

}  // namespace

TEST(QuadraticStep, ZeroIsAFixedPoint) {
  std::mt19937_64 rng(113);
  const QuadraticInstance inst = random_instance(rng, 3);
  const QuadraticIterate it = quadratic_step(inst, Vector::Zero(3), Vector::Zero(3));
  EXPECT_EQ(it.x.norm(), 0.0);
  EXPECT_EQ(it.z.norm(), 0.0);
  EXPECT_EQ(it.u.norm(), 0.0);
}

TEST(QuadraticStep, DualLocksToZ) {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 20; ++trial) {
    const QuadraticInstance inst = random_instance(rng, 4);
    const QuadraticIterate it = quadratic_step(inst, random_vector(4, rng), random_vector(4, rng));
    EXPECT_LE((it.u - (inst.delta / inst.rho) * it.z).norm(), 1e-12 * (1.0 + it.u.norm()));
  }
}

TEST(QuadraticStep, MatchesGenericEngine) {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 20; ++trial) {
    const QuadraticInstance inst = random_instance(rng, 5);
    const ProxProblem pr = quadratic_problem(inst);
    AdmmState s{Vector::Zero(5), random_vector(5, rng), random_vector(5, rng), 0};
    Vector z = s.z;
    Vector u = s.u;
    for (int k = 0; k < 10; ++k) {
      s = admm_step(pr, s, inst.rho, inst.alpha);
      const QuadraticIterate it = quadratic_step(inst, z, u);
      EXPECT_LE((s.x - it.x).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LE((s.z - it.z).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LE((s.u - it.u).lpNorm<Eigen::Infinity>(), 1e-10);
      z = it.z;
      u = it.u;
    }
  }
}

TEST(QuadraticStep, DimensionMismatch) {
  const QuadraticInstance inst{SymMatrix::identity(2), 0.0, 1.0, 1.0};
  EXPECT_THROW(quadratic_step(inst, Vector::Zero(3), Vector::Zero(2)), DimensionError);
}

TEST(TMatrix, EigenvaluesFromTheClosedForm) {
  const QuadraticInstance inst{SymMatrix{{1.0, 0.0}, {0.0, 100.0}}, 0.0, 10.0, 1.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(t_matrix(inst));
  EXPECT_NEAR(es.eigenvalues()(0), 1.0 - 100.0 / 110.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0 - 1.0 / 11.0, 1e-14);
}

TEST(TMatrix, EigenvaluesMatchFormulaForAnySpectrum) {
  std::mt19937_64 rng(137);
  for (int trial = 0; trial < 20; ++trial) {
    const QuadraticInstance inst = random_instance(rng, 4);
    Eigen::SelfAdjointEigenSolver<Matrix> qs(inst.Q.matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> ts(t_matrix(inst));
    std::vector<double> want;
    for (Eigen::Index i = 0; i < 4; ++i) {
      want.push_back(t_matrix_eig(qs.eigenvalues()(i), inst.delta, inst.rho, inst.alpha));
    }
    std::sort(want.begin(), want.end());
    for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(ts.eigenvalues()(i), want[static_cast<std::size_t>(i)], 1e-12);
  }
}

TEST(TMatrix, IterationIsLinearInZ) {
  std::mt19937_64 rng(139);
  for (int trial = 0; trial < 10; ++trial) {
    const QuadraticInstance inst = random_instance(rng, 3);
    Vector z = random_vector(3, rng);
    Vector u = (inst.delta / inst.rho) * z;
    const Matrix t = t_matrix(inst);
    for (int k = 0; k < 5; ++k) {
      const QuadraticIterate it = quadratic_step(inst, z, u);
      EXPECT_LE((it.z - t * z).norm(), 1e-12 * (1.0 + z.norm()));
      z = it.z;
      u = it.u;
    }
  }
}

TEST(QuadraticInstance, Validation) {
  EXPECT_THROW(quadratic_problem({SymMatrix{{1.0, 0.0}, {0.0, -1.0}}, 0.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(quadratic_problem({SymMatrix::identity(2), -1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(quadratic_problem({SymMatrix::identity(2), 0.0, 0.0, 1.0}), DomainError);
}

TEST(WorstCaseSetup, ReproducesTheConstructionRates) {
  const WorstCaseSetup zero = worst_case_setup({100.0, 0.0, 1.5}, DeltaMode::zero);
  EXPECT_NEAR(zero.bound.achieved_rate, 1.0 - 1.5 / 11.0, 1e-14);
  EXPECT_EQ(zero.slow_direction, Vector::Unit(2, 0));

  const WorstCaseSetup lip = worst_case_setup({100.0, 0.0, 1.5}, DeltaMode::lipschitz);
  EXPECT_EQ(lip.instance.delta, 100.0);
  EXPECT_EQ(lip.slow_direction, Vector::Unit(2, 1));

  const WorstCaseSetup neg = worst_case_setup({100.0, -0.5, 1.0});
  EXPECT_EQ(neg.instance.delta, 100.0);
  EXPECT_NEAR(neg.bound.achieved_rate, 1.0 - 200.0 / (101.0 * 101.0), 1e-14);
}

TEST(WorstCaseSetup, SlowDirectionDecaysAtThePredictedRate) {
  for (double e : {-0.5, 0.0, 0.5}) {
    for (double a : {1.0, 1.5}) {
      const ConditioningSpec spec{100.0, e, a};
      const WorstCaseSetup s = worst_case_setup(spec);
      Vector z = s.slow_direction;
      Vector u = (s.instance.delta / s.instance.rho) * z;
      const QuadraticIterate it = quadratic_step(s.instance, z, u);
      EXPECT_NEAR(it.z.norm(), std::abs(s.bound.achieved_rate), 1e-12);
      EXPECT_GE(s.bound.achieved_rate, lower_bound_rate(spec) - 1e-12);
    }
  }
}
