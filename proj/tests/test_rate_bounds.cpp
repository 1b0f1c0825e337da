#include <admmcert/rate_bounds.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace admmcert;

TEST(UpperRate, Examples) {
  const UpperRate a = upper_rate({100.0, 0.0, 1.0});
  EXPECT_DOUBLE_EQ(a.tau, 0.95);
  EXPECT_DOUBLE_EQ(a.C, 1.0);
  EXPECT_DOUBLE_EQ(upper_rate({100.0, 0.5, 1.5}).tau, 0.9925);
  EXPECT_DOUBLE_EQ(upper_rate({100.0, 0.0, 1.0}, 3.5).C, 3.5);
  EXPECT_DOUBLE_EQ(upper_rate({100.0, 0.0, 0.5}).C, std::sqrt(3.0));
}

TEST(UpperRate, Errors) {
  EXPECT_THROW(upper_rate({100.0, 0.0, 2.0}), DomainError);
  EXPECT_THROW(upper_rate({100.0, 0.0, 1.0}, 0.5), DomainError);
}

TEST(LowerBoundRate, Examples) {
  EXPECT_NEAR(lower_bound_rate({100.0, 0.0, 1.5}), 1.0 - 3.0 / 11.0, 1e-15);
  EXPECT_DOUBLE_EQ(lower_bound_rate({1.0, 0.0, 1.0}), 0.0);
  EXPECT_NEAR(lower_bound_rate({100.0, 0.5, 1.5}), 1.0 - 3.0 / 101.0, 1e-15);
}

TEST(TMatrixEig, Examples) {
  EXPECT_DOUBLE_EQ(t_matrix_eig(2.0, 0.0, 3.0, 0.7), 1.0 - 0.7 * 2.0 / 5.0);
  EXPECT_NEAR(t_matrix_eig(1.0, 0.0, 10.0, 1.0), 1.0 - 1.0 / 11.0, 1e-15);
  EXPECT_DOUBLE_EQ(t_matrix_eig(5.0, 1.0, 2.0, 0.0), 1.0);
  EXPECT_THROW(t_matrix_eig(0.0, 0.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(t_matrix_eig(1.0, -1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(t_matrix_eig(1.0, 0.0, 0.0, 1.0), DomainError);
}

TEST(WorstCase, Examples) {
  const WorstCase w = worst_case_construction({100.0, 0.0, 1.5}, 1.0, 100.0);
  EXPECT_EQ(w.delta, 0.0);
  EXPECT_EQ(w.q_eig, 1.0);
  EXPECT_NEAR(w.achieved_rate, 1.0 - 1.5 / 11.0, 1e-15);
  EXPECT_NEAR(w.rho, 10.0, 1e-14);

  const WorstCase v = worst_case_construction({100.0, -0.5, 1.0}, 1.0, 100.0);
  EXPECT_EQ(v.delta, 100.0);
  EXPECT_EQ(v.q_eig, 100.0);
  EXPECT_NEAR(v.achieved_rate, 1.0 - 200.0 / (101.0 * 101.0), 1e-14);
}

TEST(WorstCase, Errors) {
  EXPECT_THROW(worst_case_construction({100.0, 0.0, 1.0}, 1.0, 50.0), DomainError);
  EXPECT_THROW(worst_case_construction({1.0, 0.0, 1.0}, 0.0, 0.0), DomainError);
  EXPECT_THROW(worst_case_construction({1.0, 0.0, 1.0}, 2.0, 1.0), DomainError);
}

TEST(RateBounds, SampledProperties) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> logk(0.0, 5.0);
  std::uniform_real_distribution<double> alpha(0.01, 1.99);
  std::uniform_real_distribution<double> eps(-1.0, 1.0);
  std::uniform_real_distribution<double> mscale(-2.0, 2.0);
  for (int s = 0; s < 2000; ++s) {
    const ConditioningSpec spec{std::pow(10.0, logk(rng)), eps(rng), alpha(rng)};
    const BoundPair b = bound_pair(spec);
    EXPECT_LE(b.tau_lower, b.tau_upper);
    EXPECT_LE((1.0 - b.tau_lower) / (1.0 - b.tau_upper), 4.0 + 1e-12);

    const double m = std::pow(10.0, mscale(rng));
    const WorstCase w = worst_case_construction(spec, m, m * spec.kappa);
    EXPECT_GE(w.achieved_rate, b.tau_lower - 1e-12);
    const double eig = t_matrix_eig(w.q_eig, w.delta, w.rho, spec.alpha);
    EXPECT_NEAR(w.achieved_rate, eig, 1e-12 * std::max(1.0, std::abs(eig)));
    EXPECT_NEAR(w.rho, std::sqrt(m * m * spec.kappa) * spec.rho0(), 1e-12 * w.rho);
  }
}

TEST(RateBounds, UpperRateIncreasesWithAbsEpsilon) {
  for (double k : {2.0, 100.0, 1e4}) {
    for (double a : {0.5, 1.5}) {
      double prev = 0.0;
      for (double e : {0.0, 0.1, 0.3, 0.6, 1.0}) {
        const double t = upper_rate({k, e, a}).tau;
        EXPECT_GT(t, prev);
        EXPECT_DOUBLE_EQ(t, upper_rate({k, -e, a}).tau);
        prev = t;
      }
    }
  }
}
