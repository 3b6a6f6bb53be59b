#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"

namespace pcsim {

// {"n": n, "f": {"": f(empty), "0": f(0), ...}}; explicit sizes only.
inline nlohmann::json tree_to_json(const MarginalTree& tree) {
  if (tree.n() > MarginalTree::kMaxExplicit) {
    throw capability_error("tree serialization is limited to n <= 24");
  }
  nlohmann::json f = nlohmann::json::object();
  for (std::size_t depth = 0; depth < tree.n(); ++depth) {
    for (const Prefix& w : prefixes_of_length(tree.n(), depth)) {
      f[w.to_string()] = tree.marginal(w);
    }
  }
  return {{"n", tree.n()}, {"f", std::move(f)}};
}

inline MarginalTree tree_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("f")) {
    throw domain_error("tree JSON needs fields \"n\" and \"f\"");
  }
  const std::size_t n = j.at("n").get<std::size_t>();
  if (n == 0 || n > MarginalTree::kMaxExplicit) {
    throw domain_error("tree JSON n must lie in 1..24");
  }
  const auto& f = j.at("f");
  if (!f.is_object() || f.size() != MarginalTree::table_size(n)) {
    throw domain_error("tree JSON must give f for every prefix");
  }
  std::vector<double> table(MarginalTree::table_size(n));
  for (const auto& [key, value] : f.items()) {
    const Prefix w = Prefix::from_string(n, key);
    table[MarginalTree::node_index(w.bits())] = value.get<double>();
  }
  return MarginalTree::from_table(n, std::move(table));
}

}  // namespace pcsim
