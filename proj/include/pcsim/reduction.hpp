#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"

namespace pcsim {

/// Closed interval {lo..hi} of domain elements; empty when lo > hi.
struct Interval {
  std::uint64_t lo = 1;
  std::uint64_t hi = 0;

  bool empty() const noexcept { return lo > hi; }
  std::uint64_t size() const noexcept { return empty() ? 0 : hi - lo + 1; }
  bool contains(std::uint64_t e) const noexcept { return lo <= e && e <= hi; }
  Interval intersect(Interval o) const noexcept {
    return {lo > o.lo ? lo : o.lo, hi < o.hi ? hi : o.hi};
  }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Complete binary tree of domain subsets. Nodes are stored in heap order
/// (root at 0, children of i at 2i+1 and 2i+2), leaves included.
class BreakdownTree {
 public:
  BreakdownTree(std::size_t height, std::vector<std::vector<std::uint64_t>> nodes)
      : height_(height), nodes_(std::move(nodes)) {
    if (nodes_.size() != (std::size_t{2} << height_) - 1) {
      throw domain_error("breakdown tree must have 2^(height+1) - 1 nodes");
    }
  }

  std::size_t height() const noexcept { return height_; }
  const std::vector<std::uint64_t>& node(std::size_t index) const {
    return nodes_.at(index);
  }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Checks every structural requirement against the domain `omega`: the
  // root holds omega, each inner node is the disjoint union of its
  // children, and leaves hold at most one element.
  bool is_valid(const std::vector<std::uint64_t>& omega) const {
    if (nodes_.front() != omega) return false;
    const std::size_t first_leaf = (std::size_t{1} << height_) - 1;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (i >= first_leaf) {
        if (nodes_[i].size() > 1) return false;
        continue;
      }
      const auto& l = nodes_[2 * i + 1];
      const auto& r = nodes_[2 * i + 2];
      std::vector<std::uint64_t> joined = l;
      joined.insert(joined.end(), r.begin(), r.end());
      std::vector<std::uint64_t> sorted = joined;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        return false;
      }
      std::vector<std::uint64_t> self = nodes_[i];
      std::sort(self.begin(), self.end());
      if (sorted != self) return false;
    }
    return true;
  }

 private:
  std::size_t height_;
  std::vector<std::vector<std::uint64_t>> nodes_;
};

/// Balanced interval breakdown of {1..N}: element e travels the path
/// binary(e - 1) padded to `levels()` bits. Codes beyond N are padding
/// leaves holding the empty set.
class IntervalAdapter {
 public:
  explicit IntervalAdapter(std::uint64_t domain_size) : size_(domain_size) {
    if (size_ == 0) throw domain_error("interval domain must be non-empty");
    if (size_ > (std::uint64_t{1} << 62)) {
      throw capability_error("interval domain too large");
    }
    // A domain of one element still gets one level so that {0,1}^levels is
    // a valid prefix domain.
    levels_ = 1;
    while ((std::uint64_t{1} << levels_) < size_) ++levels_;
  }

  std::uint64_t domain_size() const noexcept { return size_; }
  std::size_t levels() const noexcept { return levels_; }

  BitString encode(std::uint64_t element) const {
    if (element < 1 || element > size_) throw domain_error("element outside {1..N}");
    return BitString::from_code(element - 1, levels_);
  }

  std::optional<std::uint64_t> decode(const BitString& x) const {
    if (x.size() != levels_) throw domain_error("code length mismatch");
    const std::uint64_t e = x.code() + 1;
    if (e > size_) return std::nullopt;
    return e;
  }

  Interval interval_of(BitSpan w) const {
    if (w.size() > levels_) throw domain_error("prefix longer than the tree height");
    std::uint64_t code = 0;
    for (std::uint8_t b : w) code = (code << 1) | b;
    const std::size_t free = levels_ - w.size();
    const std::uint64_t lo = (code << free) + 1;
    const std::uint64_t hi = lo + (std::uint64_t{1} << free) - 1;
    return Interval{lo, hi}.intersect(Interval{1, size_});
  }
  Interval interval_of(const Prefix& w) const {
    if (w.ambient() != levels_) throw domain_error("prefix ambient length mismatch");
    return interval_of(w.bits());
  }

  // Explicit node sets; intended for small domains.
  BreakdownTree breakdown_tree() const {
    if (levels_ > 20) throw capability_error("explicit breakdown limited to 20 levels");
    std::vector<std::vector<std::uint64_t>> nodes((std::size_t{2} << levels_) - 1);
    std::vector<std::uint8_t> bits;
    for (std::size_t depth = 0; depth <= levels_; ++depth) {
      for (std::uint64_t c = 0; c < (std::uint64_t{1} << depth); ++c) {
        bits.assign(depth, 0);
        for (std::size_t i = 0; i < depth; ++i) {
          bits[depth - 1 - i] = static_cast<std::uint8_t>((c >> i) & 1U);
        }
        const Interval iv = interval_of(bits);
        auto& set = nodes[(std::size_t{1} << depth) - 1 + c];
        for (std::uint64_t e = iv.lo; !iv.empty() && e <= iv.hi; ++e) set.push_back(e);
      }
    }
    return BreakdownTree(levels_, std::move(nodes));
  }

 private:
  std::uint64_t size_;
  std::size_t levels_ = 1;
};

// Prefix conditions already are subcube conditions: fixed leading bits,
// free remainder. nullopt marks a free coordinate.
using SubcubeCondition = std::vector<std::optional<int>>;

inline SubcubeCondition as_subcube(const Prefix& w) {
  SubcubeCondition c(w.ambient());
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = w[i];
  return c;
}

/// Explicit distribution over {1..N} given by non-negative weights.
class IntervalDistribution {
 public:
  explicit IntervalDistribution(std::vector<double> weights)
      : cumulative_(weights.size() + 1, 0.0) {
    if (weights.empty()) throw domain_error("distribution needs at least one element");
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw domain_error("weights must be non-negative");
      cumulative_[i + 1] = cumulative_[i] + weights[i];
    }
    if (!(cumulative_.back() > 0.0)) throw domain_error("total weight must be positive");
    weights_ = std::move(weights);
  }

  std::uint64_t size() const noexcept { return weights_.size(); }
  double weight(std::uint64_t e) const { return weights_.at(e - 1); }
  double total() const noexcept { return cumulative_.back(); }

  double interval_mass(Interval iv) const {
    iv = iv.intersect(Interval{1, size()});
    if (iv.empty()) return 0.0;
    return cumulative_[iv.hi] - cumulative_[iv.lo - 1];
  }

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Interval-conditional sampling access to a distribution over {1..N}.
class IntervalOracle {
 public:
  virtual ~IntervalOracle() = default;
  virtual std::uint64_t domain_size() const = 0;

  std::uint64_t sample(Interval condition, RandomStream& rng) {
    condition = condition.intersect(Interval{1, domain_size()});
    if (condition.empty()) throw domain_error("empty interval condition");
    const std::uint64_t e = draw(condition, rng);
    ++calls_;
    return e;
  }
  std::uint64_t calls() const noexcept { return calls_; }

 protected:
  virtual std::uint64_t draw(Interval condition, RandomStream& rng) = 0;

 private:
  std::uint64_t calls_ = 0;
};

// Probability of descending into `right` out of `left` + `right`; the same
// expression builds encoded marginal trees, which keeps native and encoded
// walks bit-identical.
inline double right_split(const IntervalDistribution& dist, Interval left,
                          Interval right) {
  const double ml = dist.interval_mass(left);
  const double mr = dist.interval_mass(right);
  return mr / (ml + mr);
}

/// Sum-tree sampler: walks the padded power-of-two breakdown from the
/// root, restricted to the condition interval. Levels where only one side
/// meets the condition, or where one side has zero mass, consume no
/// randomness. A zero-mass condition is answered with fair coins.
class DistributionIntervalOracle final : public IntervalOracle {
 public:
  explicit DistributionIntervalOracle(IntervalDistribution dist)
      : dist_(std::move(dist)), adapter_(dist_.size()) {}

  std::uint64_t domain_size() const override { return dist_.size(); }
  const IntervalDistribution& distribution() const noexcept { return dist_; }

 protected:
  std::uint64_t draw(Interval condition, RandomStream& rng) override {
    std::uint64_t lo = 1;
    std::uint64_t span = std::uint64_t{1} << adapter_.levels();
    const Interval domain{1, dist_.size()};
    for (std::size_t level = 0; level < adapter_.levels(); ++level) {
      span /= 2;
      const Interval left = Interval{lo, lo + span - 1}.intersect(condition).intersect(domain);
      const Interval right =
          Interval{lo + span, lo + 2 * span - 1}.intersect(condition).intersect(domain);
      int b;
      if (left.empty()) {
        b = 1;
      } else if (right.empty()) {
        b = 0;
      } else if (dist_.interval_mass(left) + dist_.interval_mass(right) == 0.0) {
        b = fair_bit(rng);
      } else {
        b = descend_bit(right_split(dist_, left, right), rng);
      }
      if (b) lo += span;
    }
    return lo;
  }

 private:
  IntervalDistribution dist_;
  IntervalAdapter adapter_;
};

/// Runs prefix-model code against an interval oracle: each prefix draw is
/// one native draw on the prefix's interval, encoded back to a bit string.
/// A prefix whose interval is empty is answered by the zero-mass
/// convention without touching the native oracle.
class AdaptedOracle final : public PrefixOracle {
 public:
  AdaptedOracle(IntervalAdapter adapter, IntervalOracle& native)
      : PrefixOracle(adapter.levels()), adapter_(adapter), native_(native) {
    if (native.domain_size() != adapter.domain_size()) {
      throw domain_error("adapter and native oracle disagree on N");
    }
  }

  const IntervalAdapter& adapter() const noexcept { return adapter_; }
  std::uint64_t native_calls() const noexcept { return native_.calls(); }

 protected:
  BitString draw(const Prefix& w, RandomStream& rng) override {
    const Interval iv = adapter_.interval_of(w);
    if (iv.empty()) {
      std::vector<std::uint8_t> bits(w.bits().begin(), w.bits().end());
      while (bits.size() < adapter_.levels()) {
        bits.push_back(static_cast<std::uint8_t>(fair_bit(rng)));
      }
      return BitString(std::move(bits));
    }
    BitString x = adapter_.encode(native_.sample(iv, rng));
    if (!x.has_prefix(w.bits())) {
      throw inconsistency_error("native draw fell outside the conditioned interval");
    }
    return x;
  }

 private:
  IntervalAdapter adapter_;
  IntervalOracle& native_;
};

/// The marginal tree of `dist` under the adapter's encoding. Edges into
/// padding get probability 0; a node that meets {1..N} but has zero mass
/// gets 1/2.
inline MarginalTree encode_distribution(const IntervalAdapter& adapter,
                                        const IntervalDistribution& dist) {
  if (adapter.domain_size() != dist.size()) {
    throw domain_error("adapter and distribution disagree on N");
  }
  return MarginalTree::tabulate(adapter.levels(), [&](BitSpan w) {
    std::vector<std::uint8_t> l(w.begin(), w.end());
    std::vector<std::uint8_t> r = l;
    l.push_back(0);
    r.push_back(1);
    const Interval left = adapter.interval_of(l);
    const Interval right = adapter.interval_of(r);
    if (right.empty()) return 0.0;
    if (dist.interval_mass(left) + dist.interval_mass(right) == 0.0) return 0.5;
    return right_split(dist, left, right);
  });
}

}  // namespace pcsim
