#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsim/adhoc.hpp"
#include "pcsim/coupling.hpp"
#include "pcsim/distance.hpp"
#include "pcsim/divergence_lab.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"
#include "pcsim/reduction.hpp"
#include "pcsim/simulation.hpp"
#include "pcsim/version.hpp"

namespace pcsim {

/// Bad experiment parameters; the message names the violated condition.
class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string subcommand;
  std::size_t n = 0;  // 0: subcommand default
  double epsilon = 0.0;
  double delta = 0.0;
  double r = 0.0;
  std::string label = "yes";
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::uint64_t sweep = 10000;  // verify-lemmas instances per checker
  std::uint64_t domain = 8;     // reduce-interval N
  std::uint64_t steps = 64;     // reduce-interval script length
  unsigned threads = 0;         // 0: hardware concurrency
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate",      "estimate-tv",   "adhoc",
                                              "hard-instance", "verify-lemmas", "reduce-interval"};
  return names;
}

struct RunRecord {
  nlohmann::json config;
  std::vector<nlohmann::json> trials;  // trial order, independent of scheduling
  nlohmann::json summary;
  bool passed = true;
  double wall_clock = 0.0;
};

inline nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json j{{"subcommand", c.subcommand}, {"seed", c.seed}, {"trials", c.trials}};
  if (c.subcommand == "simulate") {
    j["n"] = c.n;
    j["delta"] = c.delta;
  } else if (c.subcommand == "estimate-tv") {
    j["n"] = c.n;
    j["epsilon"] = c.epsilon;
  } else if (c.subcommand == "adhoc") {
    j["n"] = c.n;
    j["delta"] = c.delta;
    j["r"] = c.r;
  } else if (c.subcommand == "hard-instance") {
    j["n"] = c.n;
    j["epsilon"] = c.epsilon;
    j["label"] = c.label;
  } else if (c.subcommand == "verify-lemmas") {
    j["sweep"] = c.sweep;
  } else if (c.subcommand == "reduce-interval") {
    j["domain"] = c.domain;
    j["delta"] = c.delta;
    j["steps"] = c.steps;
  }
  return j;
}

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw usage_error(what);
}

// Fills subcommand defaults, then checks every precondition before any
// sampling happens.
inline ExperimentConfig validated(ExperimentConfig c) {
  const auto& names = subcommands();
  require(std::find(names.begin(), names.end(), c.subcommand) != names.end(),
          "unknown subcommand '" + c.subcommand + "'");
  require(c.trials >= 1, "--trials must be at least 1");
  if (c.subcommand == "simulate") {
    if (c.n == 0) c.n = 6;
    require(c.n <= 16, "simulate needs 1 <= n <= 16");
    require(c.delta > 0.0, "simulate needs delta > 0");
  } else if (c.subcommand == "estimate-tv") {
    if (c.n == 0) c.n = 4;
    require(c.n <= 10, "estimate-tv needs 1 <= n <= 10 (exact distance by enumeration)");
    require(c.epsilon > 0.0 && c.epsilon < 1.0, "estimate-tv needs 0 < epsilon < 1");
  } else if (c.subcommand == "adhoc") {
    require(c.delta > 0.0 && c.delta < 1.0 / 3.0, "adhoc needs 0 < delta < 1/3");
    require(c.r > 0.0 && c.r < 1.0 / 12.0, "adhoc needs 0 < r < 1/12");
    const std::uint64_t n_prime = adhoc_parameters(c.delta, c.r).n_prime;
    if (c.n == 0) c.n = n_prime;
    require(c.n >= n_prime, "adhoc needs n >= n' = ceil(15/r^2) = " + std::to_string(n_prime));
  } else if (c.subcommand == "hard-instance") {
    if (c.n == 0) c.n = 30;
    require(c.epsilon > 0.0, "hard-instance needs epsilon > 0");
    require(c.label == "yes" || c.label == "no", "hard-instance --label must be yes or no");
    const HardInstanceParams p = hard_instance_params(c.n, c.epsilon);
    require(p.delta < 1.0 / 3.0, "hard-instance needs delta = sqrt(2) eps / sqrt(n) < 1/3");
    require(c.label == "yes" || p.r <= 1.0, "hard-instance --label no needs n >= 64 (r = 8/sqrt(n))");
  } else if (c.subcommand == "verify-lemmas") {
    require(c.sweep >= 1, "verify-lemmas needs --sweep >= 1");
  } else if (c.subcommand == "reduce-interval") {
    require(c.domain >= 1 && c.domain <= (1U << 16), "reduce-interval needs 1 <= N <= 65536");
    require(c.delta > 0.0, "reduce-interval needs delta > 0");
  }
  return c;
}

// Runs body(trial) for every trial on a small pool; results land in trial
// order whatever the scheduling.
inline std::vector<std::vector<nlohmann::json>> run_trials(
    std::uint64_t trials, unsigned threads,
    const std::function<std::vector<nlohmann::json>(std::uint64_t)>& body) {
  std::vector<std::vector<nlohmann::json>> out(trials);
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint64_t t = next++; t < trials; t = next++) {
      try {
        out[t] = body(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return m;
}

inline void run_simulate(const ExperimentConfig& c, RunRecord& rec) {
  const auto rows = run_trials(c.trials, c.threads, [&](std::uint64_t t) {
    RandomStream rng = RandomStream::keyed(c.seed, t);
    const MarginalTree mu = random_tree(c.n, 0.2, 0.8, rng);
    TreeOracle oracle(mu);
    const LearnedDistribution ld = preprocess(c.n, oracle, c.delta, rng());
    return std::vector<nlohmann::json>{{{"trial", t},
                                        {"kl", kl_divergence(ld.tree, mu)},
                                        {"budget", oracle.budget().conditional_calls}}};
  });
  std::vector<double> kl;
  std::uint64_t budget = 0;
  for (const auto& r : rows) {
    rec.trials.push_back(r[0]);
    kl.push_back(r[0]["kl"].get<double>());
    budget += r[0]["budget"].get<std::uint64_t>();
  }
  const MeanSe m = mean_se(kl);
  rec.passed = m.mean <= c.delta + 3.0 * m.se;
  rec.summary = {{"mean_kl", m.mean},
                 {"se", m.se},
                 {"bound", c.delta},
                 {"samples_per_edge", samples_per_edge(c.n, c.delta)},
                 {"budget_total", budget},
                 {"pass", rec.passed}};
}

inline void run_estimate_tv(const ExperimentConfig& c, RunRecord& rec) {
  const TvEstimatorOptions opts;
  const std::uint64_t bound = pipeline_budget_bound(c.n, c.epsilon, opts);
  const auto rows = run_trials(c.trials, c.threads, [&](std::uint64_t t) {
    RandomStream rng = RandomStream::keyed(c.seed, t);
    const MarginalTree a = random_tree(c.n, 0.1, 0.9, rng);
    const MarginalTree b = random_tree(c.n, 0.1, 0.9, rng);
    TreeOracle oa(a);
    TreeOracle ob(b);
    const std::uint64_t seed_a = rng();
    const std::uint64_t seed_b = rng();
    const TvPipelineResult res = estimate_tv_from_samples(oa, ob, c.epsilon, seed_a, seed_b, rng, opts);
    const double exact = tv_distance(a, b);
    const bool ledger_ok = res.budget_a == res.samples_per_edge * res.pairs_a &&
                           res.budget_b == res.samples_per_edge * res.pairs_b &&
                           res.budget_a + res.budget_b <= bound;
    return std::vector<nlohmann::json>{{{"trial", t},
                                        {"estimate", res.estimate},
                                        {"exact", exact},
                                        {"error", std::fabs(res.estimate - exact)},
                                        {"within", std::fabs(res.estimate - exact) <= c.epsilon},
                                        {"epsilon", c.epsilon},
                                        {"trials", res.trials},
                                        {"budget_a", res.budget_a},
                                        {"budget_b", res.budget_b},
                                        {"ledger_ok", ledger_ok}}};
  });
  std::uint64_t within = 0;
  std::uint64_t budget = 0;
  bool ledger_ok = true;
  for (const auto& r : rows) {
    rec.trials.push_back(r[0]);
    within += r[0]["within"].get<bool>() ? 1 : 0;
    budget += r[0]["budget_a"].get<std::uint64_t>() + r[0]["budget_b"].get<std::uint64_t>();
    ledger_ok = ledger_ok && r[0]["ledger_ok"].get<bool>();
  }
  const double rate = static_cast<double>(within) / static_cast<double>(c.trials);
  rec.passed = rate >= 2.0 / 3.0 && ledger_ok;
  rec.summary = {{"success_rate", rate},
                 {"required_rate", 2.0 / 3.0},
                 {"budget_bound_per_trial", bound},
                 {"budget_total", budget},
                 {"ledger_ok", ledger_ok},
                 {"pass", rec.passed}};
}

inline nlohmann::json verdict_json(std::uint64_t t, const char* label, std::uint64_t seed,
                                   const AdHocVerdict& v, std::uint64_t draws) {
  return {{"trial", t},
          {"label", label},
          {"verdict", v.accept ? "accept" : "reject"},
          {"X", v.ones},
          {"loop_count", v.loop_count},
          {"threshold", v.params.threshold},
          {"seed", seed},
          {"budget", draws}};
}

inline void run_adhoc(const ExperimentConfig& c, RunRecord& rec) {
  const auto rows = run_trials(c.trials, c.threads, [&](std::uint64_t t) {
    RandomStream rng = RandomStream::keyed(c.seed, t);
    AdHocInstance yes = gen_instance(c.n, c.delta, 0.0, rng);
    const AdHocVerdict vy = test_ad_hoc(yes, c.delta, c.r, rng);
    AdHocInstance no = gen_instance(c.n, c.delta, c.r, rng);
    const AdHocVerdict vn = test_ad_hoc(no, c.delta, c.r, rng);
    return std::vector<nlohmann::json>{verdict_json(t, "yes", c.seed, vy, yes.total_draws()),
                                       verdict_json(t, "no", c.seed, vn, no.total_draws())};
  });
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t budget = 0;
  for (const auto& r : rows) {
    for (const auto& line : r) rec.trials.push_back(line);
    accepted += r[0]["verdict"] == "accept" ? 1 : 0;
    rejected += r[1]["verdict"] == "reject" ? 1 : 0;
    budget += r[0]["budget"].get<std::uint64_t>() + r[1]["budget"].get<std::uint64_t>();
  }
  const AdHocParameters p = adhoc_parameters(c.delta, c.r);
  const double trials = static_cast<double>(c.trials);
  const double accept_rate = static_cast<double>(accepted) / trials;
  const double reject_rate = static_cast<double>(rejected) / trials;
  rec.passed = accept_rate >= 0.6 && reject_rate >= 0.6;
  rec.summary = {{"accept_rate", accept_rate},
                 {"reject_rate", reject_rate},
                 {"required_rate", 0.6},
                 {"n_prime", p.n_prime},
                 {"q", p.q},
                 {"threshold", p.threshold},
                 {"expected_draws", p.expected_draws()},
                 {"budget_total", budget},
                 {"pass", rec.passed}};
}

inline void run_hard_instance(const ExperimentConfig& c, RunRecord& rec) {
  const Label label = c.label == "yes" ? Label::yes : Label::no;
  const auto rows = run_trials(c.trials, c.threads, [&](std::uint64_t t) {
    RandomStream rng = RandomStream::keyed(c.seed, t);
    const std::uint64_t instance_seed = rng();
    HardInstance inst = gen_hard_instance(c.n, c.epsilon, label, instance_seed);
    auto oracle = inst.make_oracle();
    const std::uint64_t count =
        effective_samples(c.n, Prefix(c.n), inst.challenge(), *oracle, rng);
    std::uint64_t ones = 0;
    for (std::uint8_t b : inst.challenge().bits()) ones += b;
    return std::vector<nlohmann::json>{{{"trial", t},
                                        {"label", c.label},
                                        {"seed", instance_seed},
                                        {"effective", count},
                                        {"challenge_ones", ones},
                                        {"budget", oracle->budget().conditional_calls}}};
  });
  std::vector<double> eff;
  std::uint64_t budget = 0;
  for (const auto& r : rows) {
    rec.trials.push_back(r[0]);
    eff.push_back(r[0]["effective"].get<double>());
    budget += r[0]["budget"].get<std::uint64_t>();
  }
  const HardInstanceParams p = hard_instance_params(c.n, c.epsilon);
  const MeanSe m = mean_se(eff);
  rec.summary = {{"mean_effective", m.mean},
                 {"se", m.se},
                 {"bound", 3.0},
                 {"delta", p.delta},
                 {"r", p.r},
                 {"budget_total", budget}};
  // The bound on effective samples is about uniform challenges.
  rec.passed = label == Label::no || m.mean <= 3.0;
  if (c.epsilon < 1.0) {
    const ThresholdConstants tc = threshold_constants(c.n, c.epsilon);
    rec.summary["k_high"] = tc.k_high;
    rec.summary["k_low"] = tc.k_low;
    rec.summary["log_p_high"] = tc.log_p_high;
    rec.summary["log_p_low"] = tc.log_p_low;
    rec.summary["gap_margin"] = gap_margin(c.n, c.epsilon);
  }
  rec.summary["pass"] = rec.passed;
}

inline void run_verify_lemmas(const ExperimentConfig& c, RunRecord& rec) {
  rec.passed = true;
  for (const SweepResult& s : run_lemma_sweep(c.sweep, c.seed)) {
    const bool ok = s.violations == 0;
    rec.passed = rec.passed && ok;
    rec.trials.push_back({{"checker", s.name},
                          {"instances", s.instances},
                          {"violations", s.violations},
                          {"worst_margin", s.worst_margin},
                          {"pass", ok}});
  }
  // Binomial grid: m = 1..64, p = 0, 0.01, ..., 1.
  double worst_ratio = 0.0;
  std::uint64_t grid_violations = 0;
  for (std::size_t m = 1; m <= 64; ++m) {
    for (int i = 0; i <= 100; ++i) {
      const double v = expected_binomial_kl(m, i / 100.0);
      worst_ratio = std::max(worst_ratio, v * static_cast<double>(m));
      if (v > 1.0 / static_cast<double>(m) + kLemmaSlack) ++grid_violations;
    }
  }
  rec.trials.push_back({{"checker", "expected_binomial_kl"},
                        {"instances", 64 * 101},
                        {"violations", grid_violations},
                        {"worst_margin", worst_ratio - 1.0},
                        {"pass", grid_violations == 0}});
  rec.passed = rec.passed && grid_violations == 0;
  rec.summary = {{"checkers", rec.trials.size()}, {"pass", rec.passed}};
}

inline void run_reduce_interval(const ExperimentConfig& c, RunRecord& rec) {
  const bool full = (c.domain & (c.domain - 1)) == 0;
  const auto rows = run_trials(c.trials, c.threads, [&](std::uint64_t t) {
    RandomStream rng = RandomStream::keyed(c.seed, t);
    std::vector<double> weights(c.domain);
    for (double& w : weights) {
      w = -std::log1p(-rng.uniform());
      // Zero-mass regions only couple exactly without padding.
      if (full && rng.below(4) == 0) w = 0.0;
    }
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
      weights[0] = 1.0;
    }
    const IntervalDistribution dist(std::move(weights));
    const IntervalCouplingReport rep = interval_coupling(dist, c.delta, rng(), c.steps, rng);
    return std::vector<nlohmann::json>{{{"trial", t},
                                        {"identical", rep.run.identical},
                                        {"queries", rep.run.queries},
                                        {"samples", rep.run.samples},
                                        {"native_calls", rep.native_calls},
                                        {"direct_calls", rep.direct_calls},
                                        {"mismatch", rep.run.first_mismatch}}};
  });
  std::uint64_t identical = 0;
  std::uint64_t budget = 0;
  for (const auto& r : rows) {
    rec.trials.push_back(r[0]);
    identical += r[0]["identical"].get<bool>() ? 1 : 0;
    budget += r[0]["native_calls"].get<std::uint64_t>();
  }
  rec.passed = identical == c.trials;
  rec.summary = {{"identical_runs", identical},
                 {"levels", IntervalAdapter(c.domain).levels()},
                 {"budget_total", budget},
                 {"pass", rec.passed}};
}

}  // namespace detail

/// Validates, dispatches and times one experiment.
inline RunRecord run(const ExperimentConfig& config) {
  const ExperimentConfig c = detail::validated(config);
  RunRecord rec;
  rec.config = config_json(c);
  const auto start = std::chrono::steady_clock::now();
  if (c.subcommand == "simulate") {
    detail::run_simulate(c, rec);
  } else if (c.subcommand == "estimate-tv") {
    detail::run_estimate_tv(c, rec);
  } else if (c.subcommand == "adhoc") {
    detail::run_adhoc(c, rec);
  } else if (c.subcommand == "hard-instance") {
    detail::run_hard_instance(c, rec);
  } else if (c.subcommand == "verify-lemmas") {
    detail::run_verify_lemmas(c, rec);
  } else {
    detail::run_reduce_interval(c, rec);
  }
  rec.wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

inline nlohmann::json summary_json(const RunRecord& rec) {
  return {{"type", "summary"},
          {"config", rec.config},
          {"summary", rec.summary},
          {"wall_clock", rec.wall_clock},
          {"code_version", kVersion}};
}

// One trial per line, then the summary line.
inline void write_jsonl(const RunRecord& rec, std::ostream& out) {
  for (const auto& t : rec.trials) out << t.dump() << '\n';
  out << summary_json(rec).dump() << '\n';
}

// Scalar trial fields as CSV; the header is the union of keys in first-seen
// order of the (sorted) JSON objects.
inline void write_csv(const RunRecord& rec, std::ostream& out) {
  std::vector<std::string> cols;
  for (const auto& t : rec.trials) {
    for (const auto& [k, v] : t.items()) {
      if (v.is_primitive() && std::find(cols.begin(), cols.end(), k) == cols.end()) {
        cols.push_back(k);
      }
    }
  }
  auto cell = [](const nlohmann::json& v) {
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    return v.dump();
  };
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& t : rec.trials) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) out << ',';
      if (t.contains(cols[i])) out << cell(t[cols[i]]);
    }
    out << '\n';
  }
}

}  // namespace pcsim
