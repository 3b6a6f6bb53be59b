// Learns a random 5-bit distribution lazily, answers a few queries and
// draws a few samples, then prints what it cost.

#include <iostream>

#include "pcsim/simulation.hpp"

int main() {
  const std::size_t n = 5;
  const double delta = 0.2;
  pcsim::RandomStream rng(2024);
  const pcsim::MarginalTree mu = pcsim::random_tree(n, 0.2, 0.8, rng);
  pcsim::TreeOracle oracle(mu);
  pcsim::SimulationState sim = pcsim::init_simulation(n, oracle, delta, 99);

  for (const char* s : {"00000", "10110", "00001"}) {
    const auto x = pcsim::BitString::from_string(s);
    std::cout << s << "  true " << pcsim::mass(mu, x) << "  simulated " << pcsim::sim_query(sim, x)
              << "  exact " << pcsim::sim_query_exact(sim, x) << '\n';
  }
  for (int i = 0; i < 3; ++i) {
    const auto [x, p] = pcsim::sim_sample(sim, rng);
    std::cout << "sample " << x.to_string() << "  p=" << p << '\n';
  }
  std::cout << "samples per edge " << sim.samples_per_edge() << ", edges learned "
            << sim.estimated_pairs() << ", oracle calls " << oracle.budget().conditional_calls
            << '\n';
}
