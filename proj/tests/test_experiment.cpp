#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "pcsim/experiment.hpp"

using pcsim::ExperimentConfig;

namespace {

ExperimentConfig config(const std::string& sub) {
  ExperimentConfig c;
  c.subcommand = sub;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Validation, RejectsBadParameters) {
  EXPECT_THROW(pcsim::run(config("nope")), pcsim::usage_error);
  auto s = config("simulate");
  EXPECT_THROW(pcsim::run(s), pcsim::usage_error);  // delta missing
  s.delta = 0.1;
  s.n = 17;
  EXPECT_THROW(pcsim::run(s), pcsim::usage_error);
  s.n = 4;
  s.trials = 0;
  EXPECT_THROW(pcsim::run(s), pcsim::usage_error);

  auto tv = config("estimate-tv");
  tv.epsilon = 1.0;
  EXPECT_THROW(pcsim::run(tv), pcsim::usage_error);

  auto a = config("adhoc");
  a.delta = 0.3;
  a.r = 1.0 / 12;
  EXPECT_THROW(pcsim::run(a), pcsim::usage_error);
  a.r = 0.0769;
  a.n = 100;
  EXPECT_THROW(pcsim::run(a), pcsim::usage_error);

  auto h = config("hard-instance");
  h.epsilon = 1.0;
  h.label = "maybe";
  EXPECT_THROW(pcsim::run(h), pcsim::usage_error);
  h.label = "no";
  EXPECT_THROW(pcsim::run(h), pcsim::usage_error);  // n = 30 < 64
  h.label = "yes";
  h.epsilon = 3.0;
  EXPECT_THROW(pcsim::run(h), pcsim::usage_error);

  auto ri = config("reduce-interval");
  ri.delta = 0.2;
  ri.domain = 0;
  EXPECT_THROW(pcsim::run(ri), pcsim::usage_error);
}

TEST(Determinism, IndependentOfThreadCount) {
  for (const std::string sub : {"simulate", "adhoc", "hard-instance", "reduce-interval"}) {
    auto c = config(sub);
    c.trials = 12;
    c.delta = sub == "adhoc" ? 0.3 : 0.25;
    c.r = 0.0769;
    c.epsilon = 0.5;
    c.n = sub == "simulate" ? 4 : 0;
    c.threads = 1;
    const auto one = pcsim::run(c);
    c.threads = 4;
    const auto four = pcsim::run(c);
    EXPECT_EQ(one.config, four.config) << sub;
    EXPECT_EQ(one.trials, four.trials) << sub;
    EXPECT_EQ(one.summary, four.summary) << sub;
    EXPECT_EQ(one.passed, four.passed) << sub;
  }
}

TEST(Output, JsonLinesEndWithSummary) {
  auto c = config("simulate");
  c.delta = 0.25;
  c.n = 3;
  c.trials = 3;
  const auto rec = pcsim::run(c);
  std::stringstream out;
  pcsim::write_jsonl(rec, out);
  std::string line;
  int lines = 0;
  nlohmann::json last;
  while (std::getline(out, line)) {
    last = nlohmann::json::parse(line);
    ++lines;
  }
  EXPECT_EQ(lines, 4);
  EXPECT_EQ(last["type"], "summary");
  EXPECT_EQ(last["config"]["seed"], 5);
  EXPECT_EQ(last["code_version"], pcsim::kVersion);
  EXPECT_TRUE(last.contains("wall_clock"));
}

TEST(Output, CsvHasHeaderAndOneRowPerTrial) {
  auto c = config("reduce-interval");
  c.delta = 0.2;
  c.trials = 5;
  const auto rec = pcsim::run(c);
  std::stringstream out;
  pcsim::write_csv(rec, out);
  std::string header, row;
  std::getline(out, header);
  EXPECT_NE(header.find("trial"), std::string::npos);
  int rows = 0;
  while (std::getline(out, row)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Runs, SmallExperimentsPass) {
  auto v = config("verify-lemmas");
  v.sweep = 200;
  EXPECT_TRUE(pcsim::run(v).passed);
  auto r = config("reduce-interval");
  r.delta = 0.1;
  r.domain = 13;
  r.trials = 4;
  EXPECT_TRUE(pcsim::run(r).passed);
}
