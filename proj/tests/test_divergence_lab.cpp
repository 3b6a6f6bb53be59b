#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>

#include "pcsim/divergence_lab.hpp"
#include "reference.hpp"

using pcsim::FiniteDistribution;
using pcsim::RandomStream;

namespace {

double binary_kl_reference(double p, double q) {
  double s = 0.0;
  if (p > 0) s += p * std::log2(p / q);
  if (p < 1) s += (1 - p) * std::log2((1 - p) / (1 - q));
  return s;
}

}  // namespace

TEST(BinomialKl, Examples) {
  for (std::size_t m : {1u, 7u, 64u}) {
    EXPECT_EQ(pcsim::expected_binomial_kl(m, 0.0), 0.0);
    EXPECT_EQ(pcsim::expected_binomial_kl(m, 1.0), 0.0);
  }
  EXPECT_NEAR(pcsim::expected_binomial_kl(1, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(pcsim::expected_binomial_kl(2, 0.5), 0.5, 1e-15);
  EXPECT_THROW(pcsim::expected_binomial_kl(0, 0.5), pcsim::capability_error);
  EXPECT_THROW(pcsim::expected_binomial_kl(65, 0.5), pcsim::capability_error);
}

TEST(BinomialKl, MatchesDirectSum) {
  for (std::size_t m : {1u, 3u, 10u, 33u, 64u}) {
    for (double p : {0.01, 0.2, 0.5, 0.77, 0.99}) {
      double want = 0.0;
      for (std::size_t t = 0; t <= m; ++t) {
        const double w = boost::math::binomial_coefficient<double>(m, t) * std::pow(p, t) *
                         std::pow(1 - p, m - t);
        want += w * binary_kl_reference(static_cast<double>(t) / m, p);
      }
      EXPECT_NEAR(pcsim::expected_binomial_kl(m, p), want, 1e-12) << m << " " << p;
    }
  }
}

TEST(BinomialKl, BoundedByOneOverMOnGrid) {
  double worst = 0.0;
  std::size_t worst_m = 0;
  int worst_i = 0;
  for (std::size_t m = 1; m <= 64; ++m) {
    for (int i = 0; i <= 100; ++i) {
      const double v = pcsim::expected_binomial_kl(m, i / 100.0);
      ASSERT_LE(v, 1.0 / m + 1e-12) << m << " " << i;
      if (v * m > worst + 1e-12) {
        worst = v * m;
        worst_m = m;
        worst_i = i;
      }
    }
  }
  EXPECT_NEAR(worst, 1.0, 1e-12);
  EXPECT_EQ(worst_i, 50);
  EXPECT_LE(worst_m, 2u);
}

TEST(FiniteDistribution, Validation) {
  EXPECT_THROW(FiniteDistribution({}), pcsim::domain_error);
  EXPECT_THROW(FiniteDistribution({0.5, 0.6}), pcsim::domain_error);
  EXPECT_THROW(FiniteDistribution({-0.1, 1.1}), pcsim::domain_error);
  EXPECT_NO_THROW(FiniteDistribution({0.25, 0.75}));
}

TEST(BoundedRatio, Examples) {
  const FiniteDistribution u({0.5, 0.5});
  EXPECT_TRUE(pcsim::check_bounded_ratio_dkl(u, u, 0.0).ok);
  EXPECT_EQ(pcsim::check_bounded_ratio_dkl(u, u, 0.0).lhs, 0.0);
  const FiniteDistribution mu({0.55, 0.45});
  const auto c = pcsim::check_bounded_ratio_dkl(mu, u, 0.1);
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(c.lhs, binary_kl_reference(0.55, 0.5), 1e-15);
  EXPECT_NEAR(c.rhs, 0.01 / std::numbers::ln2, 1e-15);
  EXPECT_THROW(pcsim::check_bounded_ratio_dkl(mu, u, 0.05), pcsim::precondition_error);
  EXPECT_THROW(pcsim::check_bounded_ratio_dkl(mu, u, 0.3), pcsim::precondition_error);
}

TEST(BoundedRatio, RandomInstancesSatisfyPrecondition) {
  RandomStream rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double t = 0.25 * rng.uniform();
    const auto [mu, nu] = pcsim::random_ratio_pair(pcsim::random_support(rng), t, rng);
    ASSERT_NO_THROW(pcsim::check_bounded_ratio_dkl(mu, nu, t));
    ASSERT_TRUE(pcsim::check_bounded_ratio_dkl(mu, nu, t).ok);
  }
}

TEST(SymmetricChiSquare, Examples) {
  const FiniteDistribution a({0.2, 0.3, 0.5});
  const auto same = pcsim::check_symmetric_chi_square(a, a);
  EXPECT_TRUE(same.ok);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  const FiniteDistribution p({1.0, 0.0});
  const FiniteDistribution q({0.0, 1.0});
  const auto disjoint = pcsim::check_symmetric_chi_square(p, q);
  EXPECT_TRUE(disjoint.ok);
  EXPECT_TRUE(std::isinf(disjoint.rhs));
  EXPECT_NEAR(disjoint.lhs, 2.0, 1e-15);
}

TEST(HalfMixture, Examples) {
  const FiniteDistribution a({0.2, 0.8});
  const FiniteDistribution b({0.6, 0.4});
  const auto r0 = pcsim::check_half_mixture_bias(a, b, 0.0);
  EXPECT_TRUE(r0.ok);
  EXPECT_EQ(r0.lhs, 0.0);
  const auto same = pcsim::check_half_mixture_bias(a, a, 0.3);
  EXPECT_TRUE(same.ok);
  EXPECT_EQ(same.rhs, 0.0);
  EXPECT_NEAR(same.lhs, 0.0, 1e-15);
  EXPECT_THROW(pcsim::check_half_mixture_bias(a, b, 0.5), pcsim::precondition_error);
  // Hand evaluation of both sides.
  const double r = 0.2;
  const double even0 = 0.4, biased0 = 0.6 * 0.2 + 0.4 * 0.6;
  const double lhs = binary_kl_reference(even0, biased0);
  const double rhs = 0.5 * r * r * (binary_kl_reference(0.2, 0.6) + binary_kl_reference(0.6, 0.2));
  const auto c = pcsim::check_half_mixture_bias(a, b, r);
  EXPECT_NEAR(c.lhs, lhs, 1e-14);
  EXPECT_NEAR(c.rhs, rhs, 1e-14);
  EXPECT_TRUE(c.ok);
}

TEST(NonAdaptiveRun, Examples) {
  const auto zero = pcsim::check_nonadaptive_run_kl({3, 5, 1}, 0.3, 0.0);
  EXPECT_NEAR(zero.lhs, 0.0, 1e-15);
  EXPECT_TRUE(zero.ok);
  // m = 1: counts are single bits with P[1] = 1/2 versus (1 - r delta)/2.
  const double delta = 0.25, r = 0.4;
  const auto one = pcsim::check_nonadaptive_run_kl({1}, delta, r);
  EXPECT_NEAR(one.lhs, binary_kl_reference(0.5, (1 - r * delta) / 2), 1e-15);
  EXPECT_NEAR(one.rhs, 5 * r * r * delta * delta, 1e-15);
  EXPECT_TRUE(one.ok);
  EXPECT_THROW(pcsim::check_nonadaptive_run_kl({21}, 0.2, 0.1), pcsim::capability_error);
  EXPECT_THROW(pcsim::check_nonadaptive_run_kl({2}, 0.34, 0.1), pcsim::precondition_error);
}

TEST(NonAdaptiveRun, AdditivityAgreesWithJointEnumeration) {
  // Joint count vectors for two indexes, enumerated directly.
  const double delta = 0.3, r = 0.25;
  const std::size_t m1 = 3, m2 = 4;
  const auto [e1, b1] = pcsim::run_count_mixtures(m1, delta, r);
  const auto [e2, b2] = pcsim::run_count_mixtures(m2, delta, r);
  const auto joint_even = pcsim::product(e1, e2);
  const auto joint_biased = pcsim::product(b1, b2);
  const double want = ref::kl_bits(joint_even.masses(), joint_biased.masses());
  EXPECT_NEAR(pcsim::check_nonadaptive_run_kl({m1, m2}, delta, r).lhs, want, 1e-13);
}

TEST(Pinsker, IdenticalAndProducts) {
  const FiniteDistribution a({0.1, 0.2, 0.7});
  const auto same = pcsim::check_pinsker(a, a);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  EXPECT_TRUE(same.ok);
  const FiniteDistribution b({0.3, 0.3, 0.4});
  const FiniteDistribution c({0.5, 0.5});
  const FiniteDistribution d({0.9, 0.1});
  const auto add = pcsim::check_product_additivity(a, b, c, d);
  EXPECT_TRUE(add.ok);
  EXPECT_NEAR(add.lhs, ref::kl_bits(a.masses(), b.masses()) + ref::kl_bits(c.masses(), d.masses()),
              1e-13);
}

TEST(ChainRule, IdenticalAndRandomTrees) {
  RandomStream rng(2);
  const auto t = pcsim::random_tree(5, 0.1, 0.9, rng);
  const auto same = pcsim::check_chain_rule(t, t);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  for (int i = 0; i < 50; ++i) {
    const auto a = pcsim::random_tree(1 + rng.below(8), 0.0, 1.0, rng);
    const auto b = pcsim::random_tree(a.n(), 0.05, 0.95, rng);
    EXPECT_TRUE(pcsim::check_chain_rule(a, b).ok);
  }
}

TEST(Sweep, NoViolations) {
  const auto results = pcsim::run_lemma_sweep(2000, 7);
  EXPECT_EQ(results.size(), 7u);
  for (const auto& r : results) {
    EXPECT_EQ(r.instances, 2000u) << r.name;
    EXPECT_EQ(r.violations, 0u) << r.name;
  }
}

TEST(Sweep, TinyMassesStayFinite) {
  const FiniteDistribution a({1e-300, 1.0 - 1e-300});
  const FiniteDistribution b({1e-290, 1.0 - 1e-290});
  EXPECT_TRUE(std::isfinite(pcsim::kl_divergence(a, b)));
  EXPECT_TRUE(pcsim::check_symmetric_chi_square(a, b).ok);
  EXPECT_TRUE(pcsim::check_half_mixture_bias(a, b, 0.4).ok);
  EXPECT_TRUE(pcsim::check_pinsker(a, b).ok);
}
