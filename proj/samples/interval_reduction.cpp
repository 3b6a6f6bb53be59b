// Runs the simulation on {1..N} through the interval adapter and checks
// it against the direct run on the encoded prefix distribution.

#include <iostream>

#include "pcsim/coupling.hpp"

int main() {
  const pcsim::IntervalDistribution dist({3, 1, 0, 4, 1, 5, 9, 2, 6, 5});
  const pcsim::IntervalAdapter adapter(dist.size());
  std::cout << "N=" << dist.size() << " levels=" << adapter.levels() << '\n';
  for (std::uint64_t e : {1, 4, 10}) {
    std::cout << e << " -> " << adapter.encode(e).to_string() << '\n';
  }
  pcsim::RandomStream script(5);
  const auto rep = pcsim::interval_coupling(dist, 0.1, 17, 50, script);
  std::cout << (rep.run.identical ? "identical" : "differs: " + rep.run.first_mismatch)
            << " over " << rep.run.queries << " queries and " << rep.run.samples
            << " samples; native calls " << rep.native_calls << '\n';
  return rep.run.identical ? 0 : 1;
}
