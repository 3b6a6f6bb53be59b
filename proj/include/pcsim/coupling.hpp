#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"
#include "pcsim/reduction.hpp"
#include "pcsim/simulation.hpp"

namespace pcsim {

// Bitwise equality; distinguishes -0.0 and compares NaNs by payload.
inline bool same_bits(double a, double b) noexcept {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

struct CouplingReport {
  bool identical = true;
  std::size_t steps = 0;
  std::size_t queries = 0;
  std::size_t samples = 0;
  std::string first_mismatch;  // empty when identical
};

namespace detail {
inline void mismatch(CouplingReport& r, const std::string& what) {
  if (r.identical) r.first_mismatch = what;
  r.identical = false;
}
}  // namespace detail

/// Drives a lazy simulation and an eager (preprocessed) one over the same
/// oracle tree with the same seed through a random script of queries and
/// samples, and compares every answer bit for bit. The lazy memo is then
/// checked edge by edge against the learned counts.
inline CouplingReport lazy_eager_coupling(const MarginalTree& input, double delta,
                                          std::uint64_t seed, std::size_t steps,
                                          RandomStream& script) {
  const std::size_t n = input.n();
  TreeOracle eager_oracle(input);
  TreeOracle lazy_oracle(input);
  const LearnedDistribution learned = preprocess(n, eager_oracle, delta, seed);
  SimulationState lazy = init_simulation(n, lazy_oracle, delta, seed);

  CouplingReport rep;
  rep.steps = steps;
  for (std::size_t s = 0; s < steps; ++s) {
    if (script.below(2) == 0) {
      ++rep.queries;
      const BitString x = BitString::from_code(script.below(std::uint64_t{1} << n), n);
      if (!same_bits(sim_query(lazy, x), query_preprocessed(learned, x))) {
        detail::mismatch(rep, "query " + x.to_string());
      }
      if (sim_query_exact(lazy, x) != learned.exact_mass(x)) {
        detail::mismatch(rep, "exact query " + x.to_string());
      }
    } else {
      ++rep.samples;
      const std::uint64_t walk_seed = script();
      RandomStream a(walk_seed);
      RandomStream b(walk_seed);
      const auto [xl, pl] = sim_sample(lazy, a);
      const auto [xe, pe] = sample_preprocessed(learned, b);
      if (xl != xe || !same_bits(pl, pe)) detail::mismatch(rep, "sample " + std::to_string(s));
    }
  }
  for (const auto& [w, pair] : lazy.history()) {
    if (pair.one.k != learned.ones[MarginalTree::node_index(w.bits())]) {
      detail::mismatch(rep, "edge " + w.to_string());
    }
  }
  if (lazy_oracle.budget().conditional_calls != lazy.cost()) {
    detail::mismatch(rep, "lazy ledger");
  }
  return rep;
}

struct IntervalCouplingReport {
  CouplingReport run;
  std::uint64_t native_calls = 0;
  std::uint64_t direct_calls = 0;
};

/// The same script of simulation queries and samples, once through the
/// interval adapter over a native oracle for `dist` and once directly on
/// the encoded prefix distribution, with shared seeds. Ends by
/// materializing both simulations and comparing their tables.
inline IntervalCouplingReport interval_coupling(const IntervalDistribution& dist, double delta,
                                                std::uint64_t seed, std::size_t steps,
                                                RandomStream& script) {
  const IntervalAdapter adapter(dist.size());
  const std::size_t n = adapter.levels();
  DistributionIntervalOracle native(dist);
  AdaptedOracle adapted(adapter, native);
  TreeOracle direct(encode_distribution(adapter, dist));
  SimulationState via_adapter = init_simulation(n, adapted, delta, seed);
  SimulationState via_prefix = init_simulation(n, direct, delta, seed);

  IntervalCouplingReport rep;
  CouplingReport& r = rep.run;
  r.steps = steps;
  for (std::size_t s = 0; s < steps; ++s) {
    if (script.below(2) == 0) {
      ++r.queries;
      const BitString x = adapter.encode(1 + script.below(dist.size()));
      if (!same_bits(sim_query(via_adapter, x), sim_query(via_prefix, x))) {
        detail::mismatch(r, "query " + x.to_string());
      }
    } else {
      ++r.samples;
      const std::uint64_t walk_seed = script();
      RandomStream a(walk_seed);
      RandomStream b(walk_seed);
      const auto [xa, pa] = sim_sample(via_adapter, a);
      const auto [xd, pd] = sim_sample(via_prefix, b);
      if (xa != xd || !same_bits(pa, pd)) detail::mismatch(r, "sample " + std::to_string(s));
    }
  }
  if (n <= kMaxPreprocess) {
    const MarginalTree ta = materialize(via_adapter);
    const MarginalTree td = materialize(via_prefix);
    for (std::size_t i = 0; i < ta.table()->size(); ++i) {
      if (!same_bits((*ta.table())[i], (*td.table())[i])) {
        detail::mismatch(r, "materialized edge " + std::to_string(i));
        break;
      }
    }
  }
  rep.native_calls = adapted.native_calls();
  rep.direct_calls = direct.budget().conditional_calls;
  if (adapted.budget().conditional_calls != rep.direct_calls) detail::mismatch(r, "ledger");
  return rep;
}

}  // namespace pcsim
