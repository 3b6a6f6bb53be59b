#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pcsim/marginal_tree.hpp"
#include "reference.hpp"

using pcsim::BitString;
using pcsim::MarginalTree;
using pcsim::Prefix;

namespace {

// f(empty) = 0.3, f(0) = 0.6, f(1) = 0.2.
MarginalTree small_tree() { return MarginalTree::from_table(2, {0.3, 0.6, 0.2}); }

}  // namespace

TEST(MarginalTree, TableValidation) {
  EXPECT_THROW(MarginalTree::from_table(2, {0.3, 0.6}), pcsim::domain_error);
  EXPECT_THROW(MarginalTree::from_table(2, {0.3, 1.6, 0.2}), pcsim::domain_error);
  EXPECT_THROW(MarginalTree::from_table(0, {}), pcsim::domain_error);
  EXPECT_THROW(MarginalTree::from_table(25, {}), pcsim::capability_error);
  const MarginalTree bad = MarginalTree::from_generator(3, [](pcsim::BitSpan) { return 2.0; });
  EXPECT_THROW(bad.marginal(Prefix(3)), pcsim::domain_error);
}

TEST(MarginalTree, MassExamples) {
  const MarginalTree u = MarginalTree::uniform(3);
  EXPECT_DOUBLE_EQ(pcsim::mass(u, BitString::from_string("101")), 0.125);
  const MarginalTree ones = MarginalTree::constant(3, 1.0);
  EXPECT_EQ(pcsim::mass(ones, BitString::from_string("111")), 1.0);
  EXPECT_EQ(pcsim::mass(ones, BitString::from_string("011")), 0.0);
  EXPECT_NEAR(pcsim::mass(small_tree(), BitString::from_string("01")), 0.7 * 0.6, 1e-15);
  EXPECT_THROW(pcsim::mass(u, BitString::from_string("10")), pcsim::domain_error);
}

TEST(MarginalTree, ConditionalMassExamples) {
  EXPECT_EQ(pcsim::conditional_mass(small_tree(), Prefix(2)), 1.0);
  EXPECT_DOUBLE_EQ(pcsim::conditional_mass(MarginalTree::uniform(6), Prefix::from_string(6, "0110")),
                   1.0 / 16);
  EXPECT_NEAR(pcsim::conditional_mass(small_tree(), Prefix::from_string(2, "0")), 0.7, 1e-15);
}

TEST(MarginalTree, MassesMatchReferenceProduct) {
  pcsim::RandomStream rng(11);
  for (std::size_t n = 1; n <= 8; ++n) {
    const MarginalTree t = pcsim::random_tree(n, 0.0, 1.0, rng);
    const auto got = pcsim::masses(t);
    const auto want = ref::masses(t);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i], want[i], 1e-15);
      EXPECT_NEAR(pcsim::mass(t, BitString::from_code(i, n)), want[i], 1e-15);
    }
  }
}

TEST(MarginalTree, GeneratorAndTableAgree) {
  auto g = [](pcsim::BitSpan w) { return (1.0 + static_cast<double>(w.size())) / 10.0; };
  const MarginalTree lazy = MarginalTree::from_generator(5, g);
  const MarginalTree table = MarginalTree::tabulate(5, g);
  EXPECT_FALSE(lazy.is_explicit());
  EXPECT_TRUE(table.is_explicit());
  EXPECT_EQ(pcsim::masses(lazy), pcsim::masses(table));
}

TEST(MarginalTree, MassesSumToOneExactlyInRationals) {
  pcsim::RandomStream rng(12);
  for (std::size_t n : {1u, 4u, 10u}) {
    const MarginalTree t = pcsim::random_tree(n, 0.0, 1.0, rng);
    ref::Rational total = 0;
    double ftotal = 0.0;
    for (std::uint64_t c = 0; c < (std::uint64_t{1} << n); ++c) {
      total += ref::exact_mass(t, c);
      ftotal += pcsim::mass(t, BitString::from_code(c, n));
    }
    EXPECT_EQ(total, 1) << "n=" << n;
    EXPECT_NEAR(ftotal, 1.0, 1e-12);
  }
}

TEST(MarginalTree, FloatSumsStayNearOneUpToTwenty) {
  pcsim::RandomStream rng(13);
  const MarginalTree t = pcsim::random_tree(20, 0.0, 1.0, rng);
  double total = 0.0;
  pcsim::for_each_mass(t, [&](std::uint64_t, double p) { total += p; });
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Divergence, TvExamples) {
  const MarginalTree a = small_tree();
  EXPECT_EQ(pcsim::tv_distance(a, a), 0.0);
  const MarginalTree p = MarginalTree::point_mass(BitString::from_string("010"));
  const MarginalTree q = MarginalTree::point_mass(BitString::from_string("011"));
  EXPECT_EQ(pcsim::tv_distance(p, q), 1.0);
  const MarginalTree b = MarginalTree::from_table(2, {0.5, 0.1, 0.9});
  // Brute force over the four outcomes.
  const double ma[4] = {0.7 * 0.4, 0.7 * 0.6, 0.3 * 0.8, 0.3 * 0.2};
  const double mb[4] = {0.5 * 0.9, 0.5 * 0.1, 0.5 * 0.1, 0.5 * 0.9};
  double want = 0.0;
  for (int i = 0; i < 4; ++i) want += std::fabs(ma[i] - mb[i]);
  EXPECT_NEAR(pcsim::tv_distance(a, b), want / 2, 1e-15);
  EXPECT_THROW(pcsim::tv_distance(MarginalTree::uniform(25), MarginalTree::uniform(25)),
               pcsim::capability_error);
}

TEST(Divergence, KlExamples) {
  const MarginalTree a = small_tree();
  EXPECT_EQ(pcsim::kl_divergence(a, a), 0.0);
  const MarginalTree u = MarginalTree::uniform(3);
  const MarginalTree p = MarginalTree::point_mass(BitString::from_string("110"));
  EXPECT_TRUE(std::isinf(pcsim::kl_divergence(u, p)));
  EXPECT_NEAR(pcsim::kl_divergence(p, u), 3.0, 1e-12);  // log2(1 / (1/8))
}

TEST(Divergence, KlOfProductTreesIsSumOfLevelKls) {
  const std::vector<double> pa{0.2, 0.7, 0.5, 0.9};
  const std::vector<double> pb{0.4, 0.6, 0.3, 0.85};
  const MarginalTree a = MarginalTree::product(pa);
  const MarginalTree b = MarginalTree::product(pb);
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    sum += (pa[i] * std::log(pa[i] / pb[i]) + (1 - pa[i]) * std::log((1 - pa[i]) / (1 - pb[i]))) /
           std::log(2.0);
  }
  EXPECT_NEAR(pcsim::kl_divergence(a, b), sum, 1e-12);
  EXPECT_NEAR(pcsim::kl_divergence(a, b), ref::kl_bits(ref::masses(a), ref::masses(b)), 1e-12);
}

TEST(Divergence, BernoulliKlExamples) {
  EXPECT_EQ(pcsim::bernoulli_kl(0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(pcsim::bernoulli_kl(1.0, 0.5), 1.0);
  EXPECT_NEAR(pcsim::bernoulli_kl(0.75, 0.5), 0.188722, 1e-6);
  EXPECT_TRUE(std::isinf(pcsim::bernoulli_kl(0.5, 0.0)));
  EXPECT_TRUE(std::isinf(pcsim::bernoulli_kl(0.5, 1.0)));
  EXPECT_EQ(pcsim::bernoulli_kl(0.0, 0.0), 0.0);
  EXPECT_EQ(pcsim::bernoulli_kl(1.0, 1.0), 0.0);
  EXPECT_THROW(pcsim::bernoulli_kl(1.5, 0.5), pcsim::domain_error);
}

TEST(Divergence, ChainRuleOnRandomTrees) {
  pcsim::RandomStream rng(14);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(8);
    const MarginalTree a = pcsim::random_tree(n, 0.05, 0.95, rng);
    const MarginalTree b = pcsim::random_tree(n, 0.05, 0.95, rng);
    const auto ma = ref::masses(a);
    double chain = 0.0;
    for (std::size_t depth = 0; depth < n; ++depth) {
      for (const Prefix& w : pcsim::prefixes_of_length(n, depth)) {
        // Cylinder mass by summing leaf masses under w.
        double cyl = 0.0;
        const std::uint64_t base = BitString(std::vector<std::uint8_t>(w.bits().begin(), w.bits().end())).code();
        const std::size_t free = n - depth;
        for (std::uint64_t c = 0; c < (std::uint64_t{1} << free); ++c) cyl += ma[(base << free) | c];
        chain += cyl * pcsim::bernoulli_kl(a.marginal(w), b.marginal(w));
      }
    }
    EXPECT_NEAR(pcsim::kl_divergence(a, b), chain, 1e-9);
  }
}

TEST(Divergence, PinskerOnRandomTreePairs) {
  pcsim::RandomStream rng(15);
  int checked = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t n = 1 + rng.below(4);
    const MarginalTree a = pcsim::random_tree(n, 0.0, 1.0, rng);
    const MarginalTree b = pcsim::random_tree(n, 0.0, 1.0, rng);
    const double kl = pcsim::kl_divergence(a, b);
    if (std::isinf(kl)) continue;
    const double tv = pcsim::tv_distance(a, b);
    ASSERT_GE(kl, 2 * tv * tv - 1e-12);
    ++checked;
  }
  EXPECT_EQ(checked, 10000);
}
