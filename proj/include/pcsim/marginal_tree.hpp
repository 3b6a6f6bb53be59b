#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/random.hpp"

namespace pcsim {

/// A distribution over {0,1}^n given by its one-edge probabilities
/// f(w) = mu(x_{|w|+1} = 1 | w) for every true prefix w.
///
/// Small trees (n <= 24) are stored as an explicit table in heap order:
/// the prefix w sits at index 2^|w| - 1 + code(w). Larger trees are backed
/// by a pure generator, so that instances with thousands of levels cost no
/// storage. Either way the object is immutable and cheap to copy.
class MarginalTree {
 public:
  using Generator = std::function<double(BitSpan)>;
  static constexpr std::size_t kMaxExplicit = 24;

  static MarginalTree from_table(std::size_t n, std::vector<double> table) {
    check_dimension(n);
    if (n > kMaxExplicit) {
      throw capability_error("explicit marginal tables are limited to n <= 24");
    }
    if (table.size() != table_size(n)) {
      throw domain_error("marginal table must hold 2^n - 1 entries");
    }
    for (double f : table) check_probability(f);
    MarginalTree t(n);
    t.table_ = std::make_shared<const std::vector<double>>(std::move(table));
    return t;
  }

  static MarginalTree from_generator(std::size_t n, Generator g) {
    check_dimension(n);
    if (!g) throw domain_error("generator must be callable");
    MarginalTree t(n);
    t.generator_ = std::move(g);
    return t;
  }

  // Explicit table filled from a generator; n <= 24.
  static MarginalTree tabulate(std::size_t n, const Generator& g) {
    check_dimension(n);
    if (n > kMaxExplicit) {
      throw capability_error("explicit marginal tables are limited to n <= 24");
    }
    std::vector<double> table(table_size(n));
    std::vector<std::uint8_t> bits;
    bits.reserve(n);
    for (std::size_t depth = 0; depth < n; ++depth) {
      bits.assign(depth, 0);
      for (std::uint64_t c = 0; c < (std::uint64_t{1} << depth); ++c) {
        for (std::size_t i = 0; i < depth; ++i) {
          bits[depth - 1 - i] = static_cast<std::uint8_t>((c >> i) & 1U);
        }
        table[(std::size_t{1} << depth) - 1 + c] = g(bits);
      }
    }
    return from_table(n, std::move(table));
  }

  static MarginalTree uniform(std::size_t n) { return constant(n, 0.5); }

  // f = p everywhere; p = 1 gives the point mass on 1^n, p = 0 on 0^n.
  static MarginalTree constant(std::size_t n, double p) {
    check_probability(p);
    return from_generator(n, [p](BitSpan) { return p; });
  }

  // Independent bits: f(w) = p[|w|].
  static MarginalTree product(std::vector<double> p) {
    for (double v : p) check_probability(v);
    const std::size_t n = p.size();
    return from_generator(n, [p = std::move(p)](BitSpan w) { return p[w.size()]; });
  }

  static MarginalTree point_mass(const BitString& x) {
    return from_generator(x.size(),
                          [x](BitSpan w) { return static_cast<double>(x[w.size()]); });
  }

  std::size_t n() const noexcept { return n_; }
  bool is_explicit() const noexcept { return table_ != nullptr; }
  const std::vector<double>* table() const noexcept { return table_.get(); }

  double marginal(BitSpan w) const {
    if (w.size() >= n_) throw domain_error("prefix too long for this tree");
    if (table_) return (*table_)[node_index(w)];
    const double f = generator_(w);
    check_probability(f);
    return f;
  }
  double marginal(const Prefix& w) const {
    if (w.ambient() != n_) throw domain_error("prefix ambient length mismatch");
    return marginal(w.bits());
  }

  // Lookup by precomputed heap index on explicit trees; falls back to the
  // generator otherwise.
  double marginal_at(std::size_t index, BitSpan w) const {
    if (table_) return (*table_)[index];
    return marginal(w);
  }

  static std::size_t node_index(BitSpan w) noexcept {
    std::size_t code = 0;
    for (std::uint8_t b : w) code = (code << 1) | b;
    return (std::size_t{1} << w.size()) - 1 + code;
  }
  static std::size_t table_size(std::size_t n) noexcept {
    return (std::size_t{1} << n) - 1;
  }

 private:
  explicit MarginalTree(std::size_t n) : n_(n) {}

  static void check_dimension(std::size_t n) {
    if (n == 0) throw domain_error("tree length must be positive");
  }
  static void check_probability(double f) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw domain_error("marginal probability outside [0,1]");
    }
  }

  std::size_t n_;
  std::shared_ptr<const std::vector<double>> table_;
  Generator generator_;
};

// Factor contributed by edge w -> wb.
inline double edge_factor(double f, int b) noexcept { return b ? f : 1.0 - f; }

inline double mass(const MarginalTree& tree, const BitString& x) {
  if (x.size() != tree.n()) throw domain_error("element length mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p *= edge_factor(tree.marginal(x.bits().first(i)), x[i]);
  }
  return p;
}

// Mass of the cylinder {w} x {0,1}^(n-|w|).
inline double conditional_mass(const MarginalTree& tree, const Prefix& w) {
  if (w.ambient() != tree.n()) throw domain_error("prefix ambient length mismatch");
  double p = 1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    p *= edge_factor(tree.marginal(w.bits().first(i)), w[i]);
  }
  return p;
}

// True iff some edge on the path to w carries probability exactly 0.
// Unlike conditional_mass() == 0 this does not underflow for large n.
inline bool zero_mass_cylinder(const MarginalTree& tree, BitSpan w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (edge_factor(tree.marginal(w.first(i)), w[i]) == 0.0) return true;
  }
  return false;
}

namespace detail {

template <class Fn>
void enumerate_joint(const MarginalTree& a, const MarginalTree* b,
                     std::vector<std::uint8_t>& bits, std::size_t index,
                     std::uint64_t code, double pa, double pb, Fn& fn) {
  const std::size_t depth = bits.size();
  if (depth == a.n()) {
    fn(code, pa, pb);
    return;
  }
  const double fa = a.marginal_at(index, bits);
  const double fb = b ? b->marginal_at(index, bits) : 0.0;
  for (int bit = 0; bit < 2; ++bit) {
    bits.push_back(static_cast<std::uint8_t>(bit));
    enumerate_joint(a, b, bits, 2 * index + 1 + bit, (code << 1) | bit,
                    pa * edge_factor(fa, bit), b ? pb * edge_factor(fb, bit) : 0.0,
                    fn);
    bits.pop_back();
  }
}

inline void require_enumerable(const MarginalTree& t) {
  if (t.n() > MarginalTree::kMaxExplicit) {
    throw capability_error("exact enumeration is limited to n <= 24");
  }
}

}  // namespace detail

// Calls fn(code, mass) for every x in lexicographic order.
template <class Fn>
void for_each_mass(const MarginalTree& tree, Fn fn) {
  detail::require_enumerable(tree);
  std::vector<std::uint8_t> bits;
  bits.reserve(tree.n());
  auto adapter = [&fn](std::uint64_t code, double pa, double) { fn(code, pa); };
  detail::enumerate_joint(tree, nullptr, bits, 0, 0, 1.0, 0.0, adapter);
}

// Calls fn(code, a(x), b(x)) for every x in lexicographic order.
template <class Fn>
void for_each_joint_mass(const MarginalTree& a, const MarginalTree& b, Fn fn) {
  if (a.n() != b.n()) throw domain_error("trees have different lengths");
  detail::require_enumerable(a);
  std::vector<std::uint8_t> bits;
  bits.reserve(a.n());
  detail::enumerate_joint(a, &b, bits, 0, 0, 1.0, 1.0, fn);
}

inline std::vector<double> masses(const MarginalTree& tree) {
  std::vector<double> out;
  out.reserve(std::size_t{1} << tree.n());
  for_each_mass(tree, [&out](std::uint64_t, double p) { out.push_back(p); });
  return out;
}

inline double tv_distance(const MarginalTree& a, const MarginalTree& b) {
  double sum = 0.0;
  for_each_joint_mass(a, b, [&sum](std::uint64_t, double pa, double pb) {
    sum += std::fabs(pa - pb);
  });
  return std::fmin(1.0, 0.5 * sum);
}

// Single KL term p log2(p/q) with 0 log(0/q) = 0.
inline double kl_term(double p, double q) noexcept {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return std::numeric_limits<double>::infinity();
  return p * (std::log2(p) - std::log2(q));
}

/// KL divergence in bits; +inf on support mismatch.
inline double kl_divergence(const MarginalTree& a, const MarginalTree& b) {
  double sum = 0.0;
  for_each_joint_mass(a, b, [&sum](std::uint64_t, double pa, double pb) {
    sum += kl_term(pa, pb);
  });
  return sum;
}

inline double bernoulli_kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) {
    throw domain_error("bernoulli_kl arguments must lie in [0,1]");
  }
  return kl_term(p, q) + kl_term(1.0 - p, 1.0 - q);
}

// Explicit tree with every marginal drawn uniformly from [lo, hi].
inline MarginalTree random_tree(std::size_t n, double lo, double hi,
                                RandomStream& rng) {
  if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) {
    throw domain_error("marginal range must satisfy 0 <= lo <= hi <= 1");
  }
  if (n == 0 || n > MarginalTree::kMaxExplicit) {
    throw capability_error("random_tree supports 1 <= n <= 24");
  }
  std::vector<double> table(MarginalTree::table_size(n));
  for (double& f : table) f = lo + (hi - lo) * rng.uniform();
  return MarginalTree::from_table(n, std::move(table));
}

}  // namespace pcsim
