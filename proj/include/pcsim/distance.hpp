#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"
#include "pcsim/simulation.hpp"

namespace pcsim {

/// Draws (x, p(x)) from some distribution p and answers mass queries p(x).
class MassOracle {
 public:
  virtual ~MassOracle() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::pair<BitString, double> draw(RandomStream& rng) = 0;
  virtual double query(const BitString& x) = 0;
};

/// A lazy simulation seen as a mass oracle. Queries and samples are charged
/// to the simulation's own oracle ledger.
class SimulationMassOracle final : public MassOracle {
 public:
  explicit SimulationMassOracle(SimulationState& sim) : sim_(sim) {}
  std::size_t dimension() const override { return sim_.n(); }
  std::pair<BitString, double> draw(RandomStream& rng) override {
    return sim_sample(sim_, rng);
  }
  double query(const BitString& x) override { return sim_query(sim_, x); }

 private:
  SimulationState& sim_;
};

/// Exact masses of an explicit or generator-backed tree.
class ExactMassOracle final : public MassOracle {
 public:
  explicit ExactMassOracle(MarginalTree tree) : tree_(std::move(tree)) {}
  std::size_t dimension() const override { return tree_.n(); }
  std::pair<BitString, double> draw(RandomStream& rng) override {
    std::vector<std::uint8_t> bits;
    bits.reserve(tree_.n());
    double p = 1.0;
    for (std::size_t i = 0; i < tree_.n(); ++i) {
      const double f = tree_.marginal(bits);
      const int b = descend_bit(f, rng);
      p *= edge_factor(f, b);
      bits.push_back(static_cast<std::uint8_t>(b));
    }
    return {BitString(std::move(bits)), p};
  }
  double query(const BitString& x) override { return mass(tree_, x); }

 private:
  MarginalTree tree_;
};

struct TvEstimatorOptions {
  double sample_constant = 16.0;  // s = ceil(C / eps^2) draws per repetition
  std::size_t repetitions = 9;    // median of K
};

struct TvEstimate {
  double estimate = 0.0;
  std::vector<double> repetitions;
  std::uint64_t draws = 0;
};

/// One-sided plug-in estimate of d_TV(a, b): the mean of
/// max(0, 1 - b(x)/a(x)) over x ~ a, boosted by a median of repetitions.
inline TvEstimate estimate_tv(MassOracle& a, MassOracle& b, double epsilon,
                              RandomStream& rng, const TvEstimatorOptions& opts = {}) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("epsilon must lie in (0,1)");
  if (opts.repetitions == 0 || !(opts.sample_constant > 0.0)) {
    throw domain_error("estimator needs positive constants");
  }
  if (a.dimension() != b.dimension()) throw domain_error("oracle dimensions differ");
  const std::uint64_t s = ceil_count(opts.sample_constant / (epsilon * epsilon));
  TvEstimate out;
  out.repetitions.reserve(opts.repetitions);
  for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
    double sum = 0.0;
    for (std::uint64_t j = 0; j < s; ++j) {
      const auto [x, pa] = a.draw(rng);
      if (!(pa > 0.0)) {
        throw inconsistency_error("mass oracle returned an element of zero mass");
      }
      const double pb = b.query(x);
      sum += std::max(0.0, 1.0 - pb / pa);
    }
    out.repetitions.push_back(sum / static_cast<double>(s));
    out.draws += s;
  }
  std::vector<double> sorted = out.repetitions;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.estimate = std::clamp(sorted[sorted.size() / 2], 0.0, 1.0);
  return out;
}

// Simulation accuracy that makes each simulated distribution (eps/3)-close
// in d_TV with probability 7/8.
inline double pipeline_delta(double epsilon) { return epsilon * epsilon / 36.0; }

/// Closed-form ledger cap for the end-to-end pipeline on n bits: two
/// simulations, each touched by K * s samples and K * s cross-queries of n
/// edges, never more than the 2^n - 1 edges of the tree.
inline std::uint64_t pipeline_budget_bound(std::size_t n, double epsilon,
                                           const TvEstimatorOptions& opts = {}) {
  const std::uint64_t m = samples_per_edge(n, pipeline_delta(epsilon));
  const std::uint64_t s = ceil_count(opts.sample_constant / (epsilon * epsilon));
  std::uint64_t edges = 2 * opts.repetitions * s * n;
  if (n < 63) edges = std::min<std::uint64_t>(edges, (std::uint64_t{1} << n) - 1);
  return 2 * m * edges;
}

struct TvPipelineResult {
  double estimate = 0.0;
  double epsilon = 0.0;
  std::size_t trials = 0;  // repetitions inside the median
  std::uint64_t budget_a = 0;
  std::uint64_t budget_b = 0;
  std::size_t pairs_a = 0;
  std::size_t pairs_b = 0;
  std::uint64_t samples_per_edge = 0;
};

/// Distance estimation from prefix conditional samples: simulate both
/// inputs at accuracy eps^2/36, then estimate the distance of the
/// simulations to within the estimator's accuracy.
inline TvPipelineResult estimate_tv_from_samples(PrefixOracle& oracle_a, PrefixOracle& oracle_b,
                                                 double epsilon, std::uint64_t seed_a,
                                                 std::uint64_t seed_b, RandomStream& rng,
                                                 const TvEstimatorOptions& opts = {}) {
  if (oracle_a.dimension() != oracle_b.dimension()) {
    throw domain_error("oracle dimensions differ");
  }
  const std::size_t n = oracle_a.dimension();
  const double delta = pipeline_delta(epsilon);
  const std::uint64_t before_a = oracle_a.budget().conditional_calls;
  const std::uint64_t before_b = oracle_b.budget().conditional_calls;
  SimulationState sim_a = init_simulation(n, oracle_a, delta, seed_a);
  SimulationState sim_b = init_simulation(n, oracle_b, delta, seed_b);
  SimulationMassOracle mass_a(sim_a);
  SimulationMassOracle mass_b(sim_b);
  const TvEstimate est = estimate_tv(mass_a, mass_b, epsilon, rng, opts);
  TvPipelineResult r;
  r.estimate = est.estimate;
  r.epsilon = epsilon;
  r.trials = opts.repetitions;
  r.budget_a = oracle_a.budget().conditional_calls - before_a;
  r.budget_b = oracle_b.budget().conditional_calls - before_b;
  r.pairs_a = sim_a.estimated_pairs();
  r.pairs_b = sim_b.estimated_pairs();
  r.samples_per_edge = sim_a.samples_per_edge();
  return r;
}

}  // namespace pcsim
