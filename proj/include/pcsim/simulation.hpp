#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"

namespace pcsim {

using Rational = boost::multiprecision::cpp_rational;

/// k of m conditional samples had the requested bit.
struct EdgeEstimate {
  std::uint64_t k = 0;
  std::uint64_t m = 0;

  double value() const noexcept {
    return static_cast<double>(k) / static_cast<double>(m);
  }
  Rational exact() const { return Rational(k, m); }
  EdgeEstimate sibling() const noexcept { return {m - k, m}; }

  friend bool operator==(const EdgeEstimate&, const EdgeEstimate&) = default;
};

// m = ceil(n / delta) samples per edge.
inline std::uint64_t samples_per_edge(std::size_t n, double delta) {
  if (!(delta > 0.0)) throw domain_error("accuracy delta must be positive");
  return ceil_count(static_cast<double>(n) / delta);
}

inline EdgeEstimate est_simulation_edge(std::size_t n, PrefixOracle& oracle, double delta,
                                        const Prefix& w, int b, RandomStream& rng) {
  if (oracle.dimension() != n || w.ambient() != n) {
    throw domain_error("edge estimation dimension mismatch");
  }
  const std::uint64_t m = samples_per_edge(n, delta);
  const std::size_t pos = w.size();
  std::uint64_t k = 0;
  for (std::uint64_t j = 0; j < m; ++j) {
    if (prefix_conditional_sample(oracle, w, rng)[pos] == b) ++k;
  }
  return {k, m};
}

// The substream that estimates the edges below w. Lazy and eager
// simulations both draw from it, which makes them couple exactly.
inline RandomStream edge_stream(std::uint64_t seed, BitSpan w) {
  return RandomStream::keyed(seed, w);
}

/// Learn-then-read simulation: every one-edge estimated up front.
struct LearnedDistribution {
  MarginalTree tree;
  std::vector<std::uint64_t> ones;  // k of each one-edge, heap order
  std::uint64_t samples_per_edge = 0;
  std::uint64_t cost = 0;

  Rational exact_mass(const BitString& x) const {
    if (x.size() != tree.n()) throw domain_error("element length mismatch");
    Rational p = 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::uint64_t k = ones[MarginalTree::node_index(x.bits().first(i))];
      p *= Rational(x[i] ? k : samples_per_edge - k, samples_per_edge);
    }
    return p;
  }
};

inline constexpr std::size_t kMaxPreprocess = 20;

inline LearnedDistribution preprocess(std::size_t n, PrefixOracle& oracle, double delta,
                                      std::uint64_t seed) {
  if (n > kMaxPreprocess) throw capability_error("preprocess is limited to n <= 20");
  const std::uint64_t m = samples_per_edge(n, delta);
  std::vector<std::uint64_t> ones(MarginalTree::table_size(n));
  std::vector<double> table(ones.size());
  for (std::size_t depth = 0; depth < n; ++depth) {
    for (const Prefix& w : prefixes_of_length(n, depth)) {
      RandomStream rng = edge_stream(seed, w.bits());
      const EdgeEstimate e = est_simulation_edge(n, oracle, delta, w, 1, rng);
      const std::size_t idx = MarginalTree::node_index(w.bits());
      ones[idx] = e.k;
      table[idx] = e.value();
    }
  }
  return LearnedDistribution{MarginalTree::from_table(n, std::move(table)), std::move(ones),
                             m, m * MarginalTree::table_size(n)};
}

inline double query_preprocessed(const LearnedDistribution& ld, const BitString& x) {
  return mass(ld.tree, x);
}

inline std::pair<BitString, double> sample_preprocessed(const LearnedDistribution& ld,
                                                        RandomStream& rng) {
  const std::size_t n = ld.tree.n();
  std::vector<std::uint8_t> bits;
  bits.reserve(n);
  double p = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = ld.tree.marginal(bits);
    const int b = descend_bit(f, rng);
    p *= edge_factor(f, b);
    bits.push_back(static_cast<std::uint8_t>(b));
  }
  return {BitString(std::move(bits)), p};
}

/// Both edges below one prefix, written together.
struct SiblingEstimates {
  EdgeEstimate zero;
  EdgeEstimate one;
};

/// Lazy simulation: edges are estimated the first time a query or sample
/// walks through them and memoized forever after.
///
/// The state borrows the oracle; the caller keeps it alive. A state has a
/// single owner and is not safe to share between threads.
class SimulationState {
 public:
  SimulationState(std::size_t n, PrefixOracle& oracle, double delta, std::uint64_t seed)
      : n_(n), oracle_(&oracle), delta_(delta), seed_(seed),
        m_(pcsim::samples_per_edge(n, delta)) {
    if (oracle.dimension() != n) throw domain_error("oracle dimension mismatch");
  }

  std::size_t n() const noexcept { return n_; }
  double delta() const noexcept { return delta_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t samples_per_edge() const noexcept { return m_; }
  PrefixOracle& oracle() const noexcept { return *oracle_; }

  const std::map<Prefix, SiblingEstimates>& history() const noexcept { return hist_; }
  std::size_t estimated_pairs() const noexcept { return hist_.size(); }
  // Conditional samples spent by this simulation.
  std::uint64_t cost() const noexcept { return m_ * hist_.size(); }

  const SiblingEstimates& access(const Prefix& w) {
    if (w.ambient() != n_) throw domain_error("prefix ambient length mismatch");
    auto it = hist_.find(w);
    if (it != hist_.end()) return it->second;
    RandomStream rng = edge_stream(seed_, w.bits());
    const EdgeEstimate one = est_simulation_edge(n_, *oracle_, delta_, w, 1, rng);
    return hist_.emplace(w, SiblingEstimates{one.sibling(), one}).first->second;
  }

 private:
  std::size_t n_;
  PrefixOracle* oracle_;
  double delta_;
  std::uint64_t seed_;
  std::uint64_t m_;
  std::map<Prefix, SiblingEstimates> hist_;
};

inline SimulationState init_simulation(std::size_t n, PrefixOracle& oracle, double delta,
                                       std::uint64_t seed) {
  return SimulationState(n, oracle, delta, seed);
}

// Estimating (w, 0) first counts zeros; the samples are the same as for
// (w, 1) because the stream depends on w only, so the stored pair is the
// same whichever bit was asked for first.
inline EdgeEstimate access_edge(SimulationState& sim, const Prefix& w, int b) {
  const SiblingEstimates& pair = sim.access(w);
  return b ? pair.one : pair.zero;
}

// Visits all n edges, also after a zero factor. The zero edge enters as
// 1 - f, exactly as a learned tree would evaluate it.
inline double sim_query(SimulationState& sim, const BitString& x) {
  if (x.size() != sim.n()) throw domain_error("element length mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = access_edge(sim, x.prefix(i), 1).value();
    p *= edge_factor(f, x[i]);
  }
  return p;
}

// Same walk in exact arithmetic: product of k/m along the path.
inline Rational sim_query_exact(SimulationState& sim, const BitString& x) {
  if (x.size() != sim.n()) throw domain_error("element length mismatch");
  Rational p = 1;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p *= access_edge(sim, x.prefix(i), x[i]).exact();
  }
  return p;
}

inline std::pair<BitString, double> sim_sample(SimulationState& sim, RandomStream& rng) {
  const std::size_t n = sim.n();
  std::vector<std::uint8_t> bits;
  bits.reserve(n);
  double p = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = access_edge(sim, Prefix(n, bits), 1).value();
    const int b = descend_bit(f, rng);
    p *= edge_factor(f, b);
    bits.push_back(static_cast<std::uint8_t>(b));
  }
  return {BitString(std::move(bits)), p};
}

// Estimates every remaining edge (breadth-first) and returns the secret
// distribution the simulation has committed to; n <= 20.
inline MarginalTree materialize(SimulationState& sim) {
  if (sim.n() > kMaxPreprocess) throw capability_error("materialize is limited to n <= 20");
  std::vector<double> table(MarginalTree::table_size(sim.n()));
  for (std::size_t depth = 0; depth < sim.n(); ++depth) {
    for (const Prefix& w : prefixes_of_length(sim.n(), depth)) {
      table[MarginalTree::node_index(w.bits())] = access_edge(sim, w, 1).value();
    }
  }
  return MarginalTree::from_table(sim.n(), std::move(table));
}

}  // namespace pcsim
