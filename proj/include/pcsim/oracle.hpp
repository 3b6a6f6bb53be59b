#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/random.hpp"

namespace pcsim {

/// Oracle usage counters. They only ever grow.
struct SampleBudget {
  std::uint64_t conditional_calls = 0;
  std::uint64_t marginal_calls = 0;
  // Filled only when tracking is enabled on the owning oracle.
  std::map<std::string, std::uint64_t> per_prefix;

  std::uint64_t total() const noexcept { return conditional_calls + marginal_calls; }
};

/// Prefix-conditional sampling access to a hidden distribution over {0,1}^n.
///
/// Draws conditioned on w always extend w. When the cylinder of w has zero
/// mass the conditional distribution is undefined; implementations then
/// return a uniform element of the cylinder, one fair coin per free bit.
class PrefixOracle {
 public:
  explicit PrefixOracle(std::size_t n) : n_(n) {
    if (n == 0) throw domain_error("oracle dimension must be positive");
  }
  virtual ~PrefixOracle() = default;
  PrefixOracle(const PrefixOracle&) = delete;
  PrefixOracle& operator=(const PrefixOracle&) = delete;

  std::size_t dimension() const noexcept { return n_; }
  const SampleBudget& budget() const noexcept { return budget_; }
  void track_prefixes(bool on) noexcept { track_ = on; }

  BitString sample(const Prefix& w, RandomStream& rng) {
    check(w);
    BitString x = draw(w, rng);
    ++budget_.conditional_calls;
    note(w);
    return x;
  }

  int marginal(const Prefix& w, RandomStream& rng) {
    check(w);
    const int b = draw_marginal(w, rng);
    ++budget_.marginal_calls;
    note(w);
    return b;
  }

 protected:
  virtual BitString draw(const Prefix& w, RandomStream& rng) = 0;
  // Default: the first free bit of a full conditional draw.
  virtual int draw_marginal(const Prefix& w, RandomStream& rng) {
    return draw(w, rng)[w.size()];
  }

 private:
  void check(const Prefix& w) const {
    if (w.ambient() != n_) throw domain_error("prefix ambient length mismatch");
  }
  void note(const Prefix& w) {
    if (track_) ++budget_.per_prefix[w.to_string()];
  }

  std::size_t n_;
  SampleBudget budget_;
  bool track_ = false;
};

/// Oracle over an explicit or generator-backed marginal tree.
class TreeOracle final : public PrefixOracle {
 public:
  explicit TreeOracle(MarginalTree tree)
      : PrefixOracle(tree.n()), tree_(std::move(tree)) {}

  const MarginalTree& tree() const noexcept { return tree_; }

 protected:
  BitString draw(const Prefix& w, RandomStream& rng) override {
    std::vector<std::uint8_t> bits(w.bits().begin(), w.bits().end());
    bits.reserve(tree_.n());
    if (zero_mass_cylinder(tree_, w.bits())) {
      while (bits.size() < tree_.n()) {
        bits.push_back(static_cast<std::uint8_t>(fair_bit(rng)));
      }
      return BitString(std::move(bits));
    }
    // Heap index is only meaningful (and only computed) for explicit tables.
    std::size_t index = tree_.is_explicit() ? MarginalTree::node_index(bits) : 0;
    while (bits.size() < tree_.n()) {
      const int b = descend_bit(tree_.marginal_at(index, bits), rng);
      bits.push_back(static_cast<std::uint8_t>(b));
      index = 2 * index + 1 + static_cast<std::size_t>(b);
    }
    return BitString(std::move(bits));
  }

  int draw_marginal(const Prefix& w, RandomStream& rng) override {
    if (zero_mass_cylinder(tree_, w.bits())) return fair_bit(rng);
    return descend_bit(tree_.marginal(w.bits()), rng);
  }

 private:
  MarginalTree tree_;
};

/// Forwards to another oracle and writes one JSON line per call:
/// {"prefix": ..., "result": ..., "budget_after": ...}.
class TranscriptOracle final : public PrefixOracle {
 public:
  TranscriptOracle(PrefixOracle& inner, std::ostream& out)
      : PrefixOracle(inner.dimension()), inner_(inner), out_(out) {}

 protected:
  BitString draw(const Prefix& w, RandomStream& rng) override {
    BitString x = inner_.sample(w, rng);
    write(w, x.to_string());
    return x;
  }
  int draw_marginal(const Prefix& w, RandomStream& rng) override {
    const int b = inner_.marginal(w, rng);
    write(w, std::to_string(b));
    return b;
  }

 private:
  void write(const Prefix& w, const std::string& result) {
    out_ << R"({"prefix":")" << w.to_string() << R"(","result":")" << result
         << R"(","budget_after":)" << inner_.budget().total() << "}\n";
  }

  PrefixOracle& inner_;
  std::ostream& out_;
};

inline BitString prefix_conditional_sample(PrefixOracle& oracle, const Prefix& w,
                                           RandomStream& rng) {
  return oracle.sample(w, rng);
}

inline int marginal_prefix_sample(PrefixOracle& oracle, const Prefix& w,
                                  RandomStream& rng) {
  return oracle.marginal(w, rng);
}

}  // namespace pcsim
