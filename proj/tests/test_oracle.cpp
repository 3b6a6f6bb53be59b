#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsim/oracle.hpp"
#include "reference.hpp"

using pcsim::BitString;
using pcsim::MarginalTree;
using pcsim::Prefix;
using pcsim::RandomStream;
using pcsim::TreeOracle;

TEST(Oracle, DeterministicLastEdge) {
  // f(01) = 1: a draw under w = 01 must return 011.
  std::vector<double> table(7, 0.5);
  table[MarginalTree::node_index(Prefix::from_string(3, "01").bits())] = 1.0;
  TreeOracle o(MarginalTree::from_table(3, table));
  RandomStream rng(1);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(pcsim::prefix_conditional_sample(o, Prefix::from_string(3, "01"), rng).to_string(),
              "011");
  }
}

TEST(Oracle, PointMassReturnsThePoint) {
  const BitString x = BitString::from_string("10110");
  TreeOracle o(MarginalTree::point_mass(x));
  RandomStream rng(2);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(o.sample(x.prefix(k), rng), x);
}

TEST(Oracle, DrawsExtendThePrefix) {
  pcsim::RandomStream build(3);
  TreeOracle o(pcsim::random_tree(6, 0.0, 1.0, build));
  RandomStream rng(4);
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = rng.below(6);
    const Prefix w = BitString::from_code(rng.below(64), 6).prefix(k);
    EXPECT_TRUE(o.sample(w, rng).has_prefix(w.bits()));
  }
}

TEST(Oracle, UniformCylinderFrequenciesFit) {
  TreeOracle o(MarginalTree::uniform(3));
  RandomStream rng(5);
  std::vector<std::uint64_t> counts(8, 0);
  for (int i = 0; i < 10000; ++i) ++counts[o.sample(Prefix(3), rng).code()];
  EXPECT_TRUE(ref::fits(counts, std::vector<double>(8, 0.125)));
}

TEST(Oracle, ConditionalFrequenciesFitRandomTree) {
  RandomStream build(6);
  const MarginalTree t = pcsim::random_tree(4, 0.1, 0.9, build);
  TreeOracle o(t);
  const Prefix w = Prefix::from_string(4, "10");
  const auto m = ref::masses(t);
  std::vector<double> p(4);
  double cyl = 0.0;
  for (int c = 0; c < 4; ++c) cyl += m[0b1000 | c];
  for (int c = 0; c < 4; ++c) p[c] = m[0b1000 | c] / cyl;
  RandomStream rng(7);
  std::vector<std::uint64_t> counts(4, 0);
  for (int i = 0; i < 20000; ++i) ++counts[o.sample(w, rng).code() & 3U];
  EXPECT_TRUE(ref::fits(counts, p));
}

TEST(Oracle, MarginalSamples) {
  std::vector<double> table{0.3, 1.0, 0.0};
  TreeOracle o(MarginalTree::from_table(2, table));
  RandomStream rng(8);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(pcsim::marginal_prefix_sample(o, Prefix::from_string(2, "0"), rng), 1);
    EXPECT_EQ(pcsim::marginal_prefix_sample(o, Prefix::from_string(2, "1"), rng), 0);
  }
  double ones = 0;
  for (int i = 0; i < 10000; ++i) ones += pcsim::marginal_prefix_sample(o, Prefix(2), rng);
  EXPECT_NEAR(ones / 10000, 0.3, 0.015);
}

TEST(Oracle, BudgetCountsEveryCall) {
  TreeOracle o(MarginalTree::uniform(4));
  RandomStream rng(9);
  EXPECT_EQ(o.budget().total(), 0u);
  o.sample(Prefix(4), rng);
  o.sample(Prefix::from_string(4, "1"), rng);
  o.marginal(Prefix(4), rng);
  EXPECT_EQ(o.budget().conditional_calls, 2u);
  EXPECT_EQ(o.budget().marginal_calls, 1u);
  EXPECT_EQ(o.budget().total(), 3u);
  EXPECT_TRUE(o.budget().per_prefix.empty());
  o.track_prefixes(true);
  o.sample(Prefix::from_string(4, "1"), rng);
  o.sample(Prefix::from_string(4, "1"), rng);
  EXPECT_EQ(o.budget().per_prefix.at("1"), 2u);
  EXPECT_THROW(o.sample(Prefix(5), rng), pcsim::domain_error);
  EXPECT_EQ(o.budget().conditional_calls, 4u);
}

TEST(Oracle, ZeroMassCylinderIsUniform) {
  // f(empty) = 1: the cylinder of "0" has zero mass.
  std::vector<double> table(7, 0.9);
  table[0] = 1.0;
  TreeOracle o(MarginalTree::from_table(3, table));
  RandomStream rng(10);
  std::vector<std::uint64_t> counts(4, 0);
  for (int i = 0; i < 8000; ++i) {
    const BitString x = o.sample(Prefix::from_string(3, "0"), rng);
    ASSERT_EQ(x[0], 0);
    ++counts[x.code() & 3U];
  }
  EXPECT_TRUE(ref::fits(counts, std::vector<double>(4, 0.25)));
  double ones = 0;
  for (int i = 0; i < 4000; ++i) ones += o.marginal(Prefix::from_string(3, "0"), rng);
  EXPECT_NEAR(ones / 4000, 0.5, 4 * std::sqrt(0.25 / 4000));
}

TEST(Oracle, TranscriptRecordsEachCall) {
  TreeOracle inner(MarginalTree::point_mass(BitString::from_string("101")));
  std::ostringstream log;
  pcsim::TranscriptOracle o(inner, log);
  RandomStream rng(11);
  o.sample(Prefix::from_string(3, "1"), rng);
  o.marginal(Prefix(3), rng);
  std::istringstream lines(log.str());
  std::string line;
  std::getline(lines, line);
  auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["prefix"], "1");
  EXPECT_EQ(j["result"], "101");
  EXPECT_EQ(j["budget_after"], 1);
  std::getline(lines, line);
  j = nlohmann::json::parse(line);
  EXPECT_EQ(j["prefix"], "");
  EXPECT_EQ(j["result"], "1");
  EXPECT_EQ(j["budget_after"], 2);
  EXPECT_EQ(o.budget().total(), 2u);
}

TEST(Oracle, GeneratorTreesScaleToLargeN) {
  const MarginalTree t = MarginalTree::from_generator(
      3000, [](pcsim::BitSpan w) { return w.size() % 2 ? 0.25 : 0.75; });
  TreeOracle o(t);
  RandomStream rng(12);
  const BitString x = o.sample(Prefix(3000), rng);
  EXPECT_EQ(x.size(), 3000u);
}
