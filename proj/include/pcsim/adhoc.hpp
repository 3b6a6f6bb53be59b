#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/oracle.hpp"
#include "pcsim/random.hpp"
#include "pcsim/simulation.hpp"

namespace pcsim {

// ---------------------------------------------------------------------------
// Ad-hoc model: hidden Bernoulli parameters, one index per draw.
// ---------------------------------------------------------------------------

class AdHocInstance {
 public:
  explicit AdHocInstance(std::vector<double> p) : p_(std::move(p)), draws_(p_.size(), 0) {
    if (p_.empty()) throw domain_error("ad-hoc instance needs at least one index");
    for (double v : p_) {
      if (!(v >= 0.0 && v <= 1.0)) throw domain_error("probabilities must lie in [0,1]");
    }
  }

  std::size_t size() const noexcept { return p_.size(); }

  // 1-based index, as in the model.
  int sample(std::size_t i, RandomStream& rng) {
    if (i < 1 || i > p_.size()) throw domain_error("index outside 1..n");
    ++draws_[i - 1];
    ++total_;
    return rng.bernoulli(p_[i - 1]) ? 1 : 0;
  }

  std::uint64_t draws(std::size_t i) const { return draws_.at(i - 1); }
  std::uint64_t total_draws() const noexcept { return total_; }

  // For tests and diagnostics only; testers must not look.
  double hidden_probability(std::size_t i) const { return p_.at(i - 1); }

 private:
  std::vector<double> p_;
  std::vector<std::uint64_t> draws_;
  std::uint64_t total_ = 0;
};

/// D_n(delta, r): p_i = (1 - delta)/2 with probability (1 + r)/2, else
/// (1 + delta)/2. delta = 0 is accepted for plumbing tests.
inline AdHocInstance gen_instance(std::size_t n, double delta, double r, RandomStream& rng) {
  if (n == 0) throw domain_error("n must be positive");
  if (!(delta >= 0.0 && delta < 1.0 / 3.0)) throw domain_error("delta must lie in [0, 1/3)");
  if (!(r >= 0.0 && r < 1.0 / 12.0)) throw domain_error("r must lie in [0, 1/12)");
  const double low = (1.0 - delta) / 2.0;
  const double high = (1.0 + delta) / 2.0;
  const double p_low = (1.0 + r) / 2.0;
  std::vector<double> p(n);
  for (double& v : p) v = rng.bernoulli(p_low) ? low : high;
  return AdHocInstance(std::move(p));
}

inline int sample_index(AdHocInstance& inst, std::size_t i, RandomStream& rng) {
  return inst.sample(i, rng);
}

struct AdHocParameters {
  std::uint64_t n_prime = 0;  // ceil(15 / r^2) indexes used
  double q = 0.0;             // 10 / delta^2 expected draws per index
  double threshold = 0.0;     // q n'/2 - r delta q n'/4, halfway between the two means
  double expected_draws() const noexcept { return q * static_cast<double>(n_prime); }
};

inline AdHocParameters adhoc_parameters(double delta, double r) {
  if (!(delta > 0.0 && delta <= 1.0)) throw domain_error("delta must lie in (0,1]");
  if (!(r > 0.0 && r <= 1.0)) throw domain_error("r must lie in (0,1]");
  AdHocParameters p;
  p.n_prime = ceil_count(15.0 / (r * r));
  p.q = 10.0 / (delta * delta);
  const double qn = p.q * static_cast<double>(p.n_prime);
  p.threshold = 0.5 * qn - 0.25 * r * delta * qn;
  return p;
}

struct AdHocVerdict {
  bool accept = false;
  std::uint64_t ones = 0;        // X
  std::uint64_t loop_count = 0;  // the Poisson draw
  AdHocParameters params;
};

/// Poissonized tester: Poi(n'q) draws at uniform indexes among the first
/// n', accept iff the number of ones reaches the threshold.
inline AdHocVerdict test_ad_hoc(AdHocInstance& inst, double delta, double r, RandomStream& rng) {
  AdHocVerdict v;
  v.params = adhoc_parameters(delta, r);
  if (inst.size() < v.params.n_prime) {
    throw capability_error("instance has " + std::to_string(inst.size()) +
                           " indexes but the tester needs n' = " +
                           std::to_string(v.params.n_prime));
  }
  v.loop_count = rng.poisson(v.params.expected_draws());
  for (std::uint64_t j = 0; j < v.loop_count; ++j) {
    const std::size_t i = 1 + static_cast<std::size_t>(rng.below(v.params.n_prime));
    v.ones += static_cast<std::uint64_t>(inst.sample(i, rng));
  }
  v.accept = static_cast<double>(v.ones) >= v.params.threshold;
  return v;
}

// ---------------------------------------------------------------------------
// Hard instances over {0,1}^n.
// ---------------------------------------------------------------------------

/// s_w in {+1, -1} for every prefix, a pure function of (seed, w). The
/// memo records which signs have been looked at.
class SignAssignment {
 public:
  SignAssignment(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {
    if (n == 0) throw domain_error("n must be positive");
  }

  static int sign_of(std::uint64_t seed, BitSpan w) noexcept {
    return (hash_bits(mix64(seed ^ 0xA4093822299F31D0ULL), w) >> 63) ? 1 : -1;
  }

  int sign(const Prefix& w) {
    if (w.ambient() != n_) throw domain_error("prefix ambient length mismatch");
    auto [it, inserted] = memo_.try_emplace(w, 0);
    if (inserted) it->second = sign_of(seed_, w.bits());
    return it->second;
  }

  std::size_t n() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::map<Prefix, int>& materialized() const noexcept { return memo_; }

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::map<Prefix, int> memo_;
};

enum class Label { yes, no };

inline const char* to_string(Label l) noexcept { return l == Label::yes ? "yes" : "no"; }

struct HardInstanceParams {
  double delta = 0.0;
  double r = 0.0;
};

// delta = sqrt(2) eps / sqrt(n), r = 8 / sqrt(n).
inline HardInstanceParams hard_instance_params(std::size_t n, double epsilon) {
  if (n == 0) throw domain_error("n must be positive");
  if (!(epsilon > 0.0)) throw domain_error("epsilon must be positive");
  const double sn = std::sqrt(static_cast<double>(n));
  return {std::sqrt(2.0) * epsilon / sn, 8.0 / sn};
}

/// A pair (mu, x): mu(1|w) = (1 + s_w delta)/2, and x uniform (yes) or
/// drawn from mu'(1|w) = (1 - s_w r)/2 (no).
class HardInstance {
 public:
  HardInstance(std::size_t n, HardInstanceParams params, Label label, std::uint64_t seed)
      : n_(n), params_(params), label_(label), seed_(seed), signs_(n, seed),
        mu_(make_tree(n, seed, params.delta)),
        mu_prime_(make_tree(n, seed, -params.r)) {
    if (!(params.delta >= 0.0 && params.delta < 1.0)) {
      throw domain_error("hard instance needs 0 <= delta < 1");
    }
    if (label == Label::no && !(params.r >= 0.0 && params.r <= 1.0)) {
      throw domain_error("no-instances need 0 <= r <= 1, i.e. n >= 64 with r = 8/sqrt(n)");
    }
    RandomStream rng = RandomStream::keyed(seed, std::uint64_t{0x5EED});
    std::vector<std::uint8_t> bits;
    bits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int b = label == Label::yes ? fair_bit(rng) : descend_bit(mu_prime_.marginal(bits), rng);
      bits.push_back(static_cast<std::uint8_t>(b));
    }
    challenge_ = BitString(std::move(bits));
  }

  std::size_t n() const noexcept { return n_; }
  Label label() const noexcept { return label_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const HardInstanceParams& params() const noexcept { return params_; }
  const BitString& challenge() const noexcept { return challenge_; }
  const MarginalTree& input() const noexcept { return mu_; }
  const MarginalTree& tilted() const noexcept { return mu_prime_; }
  SignAssignment& signs() noexcept { return signs_; }

  std::unique_ptr<TreeOracle> make_oracle() const { return std::make_unique<TreeOracle>(mu_); }

 private:
  // f(w) = (1 + s_w * scale) / 2; the tilted tree passes scale = -r.
  static MarginalTree make_tree(std::size_t n, std::uint64_t seed, double scale) {
    return MarginalTree::from_generator(n, [seed, scale](BitSpan w) {
      const double f = (1.0 + SignAssignment::sign_of(seed, w) * scale) / 2.0;
      return std::fmin(1.0, std::fmax(0.0, f));
    });
  }

  std::size_t n_;
  HardInstanceParams params_;
  Label label_;
  std::uint64_t seed_;
  SignAssignment signs_;
  MarginalTree mu_;
  MarginalTree mu_prime_;
  BitString challenge_;
};

inline HardInstance gen_hard_instance(std::size_t n, double epsilon, Label label,
                                      std::uint64_t seed) {
  return HardInstance(n, hard_instance_params(n, epsilon), label, seed);
}

/// One prefix-conditional draw under w; counts the intermediate prefixes
/// W_|w|, ..., W_{n-1} of the draw that are prefixes of x.
inline std::uint64_t effective_samples(std::size_t n, const Prefix& w, const BitString& x,
                                       PrefixOracle& oracle, RandomStream& rng) {
  if (oracle.dimension() != n || x.size() != n || w.ambient() != n) {
    throw domain_error("effective_samples dimension mismatch");
  }
  const BitString y = prefix_conditional_sample(oracle, w, rng);
  std::uint64_t count = 0;
  for (std::size_t j = w.size(); j < n; ++j) {
    if (!x.has_prefix(y.bits().first(j))) break;
    ++count;
  }
  return count;
}

inline std::uint64_t effective_samples(std::size_t n, const Prefix& w, const BitString& x,
                                       const MarginalTree& tree, RandomStream& rng) {
  TreeOracle oracle(tree);
  return effective_samples(n, w, x, oracle, rng);
}

// ---------------------------------------------------------------------------
// Threshold constants for separating heavy and light elements.
// ---------------------------------------------------------------------------

struct ThresholdConstants {
  std::size_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double k_high = 0.0;    // n/2 - sqrt(3 n)
  double k_low = 0.0;     // n/2 - sqrt(6 n)
  double log_p_high = 0;  // natural log of 2^-n (1+d)^k_high (1-d)^(n-k_high)
  double log_p_low = 0;
};

inline ThresholdConstants threshold_constants(std::size_t n, double epsilon) {
  const HardInstanceParams hp = hard_instance_params(n, epsilon);
  if (!(hp.delta < 1.0)) throw domain_error("delta = sqrt(2) eps / sqrt(n) must be below 1");
  ThresholdConstants t;
  t.n = n;
  t.epsilon = epsilon;
  t.delta = hp.delta;
  const double nn = static_cast<double>(n);
  const double sn = std::sqrt(nn);
  t.k_high = 0.5 * nn - std::sqrt(3.0) * sn;
  t.k_low = 0.5 * nn - std::sqrt(6.0) * sn;
  const double up = std::log1p(hp.delta);
  const double down = std::log1p(-hp.delta);
  const double base = -nn * std::log(2.0);
  t.log_p_high = base + t.k_high * up + (nn - t.k_high) * down;
  t.log_p_low = base + t.k_low * up + (nn - t.k_low) * down;
  return t;
}

// log((1 - eps) p_H) - log((1 + eps) p_L), evaluated without forming the
// (tiny) probabilities or subtracting their large logs.
inline double gap_margin(std::size_t n, double epsilon) {
  const ThresholdConstants t = threshold_constants(n, epsilon);
  const double log_ratio = std::log1p(t.delta) - std::log1p(-t.delta);
  return std::log1p(-epsilon) - std::log1p(epsilon) + (t.k_high - t.k_low) * log_ratio;
}

inline bool check_gap(std::size_t n, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("epsilon must lie in (0,1)");
  return gap_margin(n, epsilon) > 0.0;
}

// ---------------------------------------------------------------------------
// Exact posterior of off-path signs given the challenge element.
// ---------------------------------------------------------------------------

struct PosteriorReport {
  bool uniform = true;
  Rational max_deviation = 0;  // max |posterior - 2^-|off path|| over x and assignments
  std::size_t elements_checked = 0;
};

/// Enumerates every sign vector s in {+1,-1}^(2^n - 1) and every x, and
/// compares Pr[off-path signs = f | x] with the uniform prior, exactly.
/// r must lie in [0,1]; elements of probability zero are skipped.
inline PosteriorReport off_path_posterior(std::size_t n, Label label, const Rational& r) {
  if (n == 0 || n > 4) throw capability_error("posterior enumeration supports 1 <= n <= 4");
  if (r < 0 || r > 1) throw domain_error("r must lie in [0,1]");
  const std::size_t prefixes = (std::size_t{1} << n) - 1;
  const std::uint64_t assignments = std::uint64_t{1} << prefixes;
  const std::uint64_t elements = std::uint64_t{1} << n;
  PosteriorReport report;

  for (std::uint64_t code = 0; code < elements; ++code) {
    const BitString x = BitString::from_code(code, n);
    std::vector<std::size_t> path(n);
    std::vector<bool> on_path(prefixes, false);
    for (std::size_t i = 0; i < n; ++i) {
      path[i] = MarginalTree::node_index(x.bits().first(i));
      on_path[path[i]] = true;
    }
    std::vector<std::size_t> off;
    for (std::size_t idx = 0; idx < prefixes; ++idx) {
      if (!on_path[idx]) off.push_back(idx);
    }

    // joint[f] = sum over s with off-path part f of Pr[s] Pr[x | s]; the
    // uniform prior factor 2^-prefixes cancels in the posterior.
    std::vector<Rational> joint(std::size_t{1} << off.size(), Rational(0));
    Rational evidence = 0;
    for (std::uint64_t s = 0; s < assignments; ++s) {
      Rational px = 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (label == Label::yes) {
          px *= Rational(1, 2);
        } else {
          const int sign = ((s >> path[i]) & 1U) ? 1 : -1;
          // mu'(1|w) = (1 - s_w r)/2
          const Rational one = (Rational(1) - sign * r) / 2;
          px *= x[i] ? one : Rational(1) - one;
        }
      }
      std::size_t f = 0;
      for (std::size_t j = 0; j < off.size(); ++j) {
        f |= static_cast<std::size_t>((s >> off[j]) & 1U) << j;
      }
      joint[f] += px;
      evidence += px;
    }
    if (evidence == 0) continue;
    ++report.elements_checked;
    const Rational prior = Rational(1, std::uint64_t{1} << off.size());
    for (const Rational& j : joint) {
      Rational dev = j / evidence - prior;
      if (dev < 0) dev = -dev;
      if (dev > report.max_deviation) report.max_deviation = dev;
      if (dev != 0) report.uniform = false;
    }
  }
  return report;
}

}  // namespace pcsim
