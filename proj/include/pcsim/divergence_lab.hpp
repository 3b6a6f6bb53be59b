#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "pcsim/bits.hpp"
#include "pcsim/errors.hpp"
#include "pcsim/marginal_tree.hpp"
#include "pcsim/random.hpp"

namespace pcsim {

inline constexpr double kLemmaSlack = 1e-12;

/// Masses over {0..k-1}.
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw domain_error("distribution needs a non-empty support");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0 && v <= 1.0)) throw domain_error("masses must lie in [0,1]");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12 * static_cast<double>(p_.size())) {
      throw domain_error("masses must sum to 1");
    }
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& masses() const noexcept { return p_; }

 private:
  std::vector<double> p_;
};

inline void require_same_support(const FiniteDistribution& a, const FiniteDistribution& b) {
  if (a.size() != b.size()) throw domain_error("distributions live on different supports");
}

inline double kl_divergence(const FiniteDistribution& a, const FiniteDistribution& b) {
  require_same_support(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += kl_term(a[i], b[i]);
  return sum;
}

inline double tv_distance(const FiniteDistribution& a, const FiniteDistribution& b) {
  require_same_support(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(a[i] - b[i]);
  return 0.5 * sum;
}

// wa * a + wb * b, no renormalization.
inline FiniteDistribution mixture(double wa, const FiniteDistribution& a, double wb,
                                  const FiniteDistribution& b) {
  require_same_support(a, b);
  std::vector<double> p(a.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = wa * a[i] + wb * b[i];
  return FiniteDistribution(std::move(p));
}

// Row-major: index i * b.size() + j.
inline FiniteDistribution product(const FiniteDistribution& a, const FiniteDistribution& b) {
  std::vector<double> p;
  p.reserve(a.size() * b.size());
  for (double x : a.masses()) {
    for (double y : b.masses()) p.push_back(x * y);
  }
  return FiniteDistribution(std::move(p));
}

// Binomial pmf evaluated through logs; exact zeros at p in {0, 1}.
inline std::vector<double> binomial_pmf(std::size_t m, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw domain_error("p must lie in [0,1]");
  std::vector<double> w(m + 1, 0.0);
  if (p == 0.0) {
    w[0] = 1.0;
    return w;
  }
  if (p == 1.0) {
    w[m] = 1.0;
    return w;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lm = std::lgamma(static_cast<double>(m) + 1.0);
  for (std::size_t t = 0; t <= m; ++t) {
    const double td = static_cast<double>(t);
    const double lc = lm - std::lgamma(td + 1.0) - std::lgamma(static_cast<double>(m - t) + 1.0);
    w[t] = std::exp(lc + td * lp + static_cast<double>(m - t) * lq);
  }
  return w;
}

inline FiniteDistribution binomial(std::size_t m, double p) {
  std::vector<double> w = binomial_pmf(m, p);
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return FiniteDistribution(std::move(w));
}

/// E_{t ~ Bin(m,p)} [D_KL(t/m, p)] in bits, by enumerating t.
inline double expected_binomial_kl(std::size_t m, double p) {
  if (m < 1 || m > 64) throw capability_error("expected_binomial_kl supports 1 <= m <= 64");
  const std::vector<double> w = binomial_pmf(m, p);
  double sum = 0.0;
  for (std::size_t t = 0; t <= m; ++t) {
    if (w[t] == 0.0) continue;
    sum += w[t] * bernoulli_kl(static_cast<double>(t) / static_cast<double>(m), p);
  }
  return sum;
}

/// Outcome of one inequality check: ok iff lhs <= rhs (+ slack), or the
/// equality holds within slack for the identities.
struct LemmaCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

namespace detail {
inline LemmaCheck at_most(double lhs, double rhs, double slack = kLemmaSlack) {
  return {lhs, rhs, std::isinf(rhs) || lhs <= rhs + slack};
}
inline LemmaCheck equal(double lhs, double rhs, double slack) {
  if (std::isinf(lhs) || std::isinf(rhs)) return {lhs, rhs, lhs == rhs};
  return {lhs, rhs, std::fabs(lhs - rhs) <= slack * std::max(1.0, std::fabs(rhs))};
}
}  // namespace detail

/// mu(x) within (1 +- t) nu(x) pointwise implies D_KL(mu||nu) <= t^2 / ln 2.
inline LemmaCheck check_bounded_ratio_dkl(const FiniteDistribution& mu,
                                          const FiniteDistribution& nu, double t) {
  require_same_support(mu, nu);
  if (!(t >= 0.0 && t <= 0.25)) throw precondition_error("ratio bound t must lie in [0, 1/4]");
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (std::fabs(mu[i] - nu[i]) > t * nu[i] + kLemmaSlack * nu[i] + 1e-300) {
      throw precondition_error("mu(x) is not within (1 +- t) nu(x) at index " +
                               std::to_string(i));
    }
  }
  return detail::at_most(kl_divergence(mu, nu), t * t / std::numbers::ln2);
}

/// sum (mu - nu)^2 / (mu + nu) <= (D_KL(mu||nu) + D_KL(nu||mu)) ln 2.
inline LemmaCheck check_symmetric_chi_square(const FiniteDistribution& mu,
                                             const FiniteDistribution& nu) {
  require_same_support(mu, nu);
  double lhs = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = mu[i] + nu[i];
    if (s > 0.0) lhs += (mu[i] - nu[i]) * (mu[i] - nu[i]) / s;
  }
  const double rhs = (kl_divergence(mu, nu) + kl_divergence(nu, mu)) * std::numbers::ln2;
  return detail::at_most(lhs, rhs);
}

/// D_KL(mu/2 + nu/2 || (1+r)/2 mu + (1-r)/2 nu) <= r^2/2 (D_KL(mu||nu) + D_KL(nu||mu)).
inline LemmaCheck check_half_mixture_bias(const FiniteDistribution& mu,
                                          const FiniteDistribution& nu, double r) {
  require_same_support(mu, nu);
  if (!(std::fabs(r) < 0.5)) throw precondition_error("|r| must be below 1/2");
  const FiniteDistribution even = mixture(0.5, mu, 0.5, nu);
  const FiniteDistribution biased = mixture((1.0 + r) / 2.0, mu, (1.0 - r) / 2.0, nu);
  const double rhs = 0.5 * r * r * (kl_divergence(mu, nu) + kl_divergence(nu, mu));
  return detail::at_most(kl_divergence(even, biased), rhs);
}

/// Count-distribution of one index under D(delta, 0) (even) and D(delta, r)
/// (biased): mixtures of Bin(m, (1-delta)/2) and Bin(m, (1+delta)/2).
inline std::pair<FiniteDistribution, FiniteDistribution> run_count_mixtures(std::size_t m,
                                                                             double delta,
                                                                             double r) {
  const FiniteDistribution low = binomial(m, (1.0 - delta) / 2.0);
  const FiniteDistribution high = binomial(m, (1.0 + delta) / 2.0);
  return {mixture(0.5, low, 0.5, high), mixture((1.0 + r) / 2.0, low, (1.0 - r) / 2.0, high)};
}

/// Exact KL between runs of a non-adaptive algorithm drawing m_i samples of
/// index i, on D(delta, 0) versus D(delta, r), against 5 r^2 delta^2 sum m_i.
/// Uses additivity over independent indexes.
inline LemmaCheck check_nonadaptive_run_kl(const std::vector<std::size_t>& m, double delta,
                                           double r) {
  if (!(delta >= 0.0 && delta < 1.0 / 3.0)) throw precondition_error("delta must lie in [0,1/3)");
  if (!(std::fabs(r) < 0.5)) throw precondition_error("|r| must be below 1/2");
  double lhs = 0.0;
  double q = 0.0;
  for (std::size_t mi : m) {
    if (mi > 20) throw capability_error("per-index sample counts are limited to 20");
    const auto [even, biased] = run_count_mixtures(mi, delta, r);
    lhs += kl_divergence(even, biased);
    q += static_cast<double>(mi);
  }
  return detail::at_most(lhs, 5.0 * r * r * delta * delta * q);
}

/// D_KL >= 2 d_TV^2 (KL in bits, which only strengthens the nats form).
inline LemmaCheck check_pinsker(const FiniteDistribution& mu, const FiniteDistribution& nu) {
  const double tv = tv_distance(mu, nu);
  const double kl = kl_divergence(mu, nu);
  return {2.0 * tv * tv, kl, kl >= 2.0 * tv * tv - 1e-9};
}

inline LemmaCheck check_pinsker(const MarginalTree& a, const MarginalTree& b) {
  const double tv = tv_distance(a, b);
  const double kl = kl_divergence(a, b);
  return {2.0 * tv * tv, kl, kl >= 2.0 * tv * tv - 1e-9};
}

/// D_KL(mu1 x mu2 || nu1 x nu2) = D_KL(mu1||nu1) + D_KL(mu2||nu2).
inline LemmaCheck check_product_additivity(const FiniteDistribution& mu1,
                                           const FiniteDistribution& nu1,
                                           const FiniteDistribution& mu2,
                                           const FiniteDistribution& nu2) {
  const double lhs = kl_divergence(product(mu1, mu2), product(nu1, nu2));
  const double rhs = kl_divergence(mu1, nu1) + kl_divergence(mu2, nu2);
  return detail::equal(lhs, rhs, 1e-9);
}

/// Enumerated D_KL(a||b) against sum over prefixes w of a(w) D_KL(a(1|w), b(1|w)).
inline LemmaCheck check_chain_rule(const MarginalTree& a, const MarginalTree& b) {
  if (a.n() != b.n()) throw domain_error("trees have different lengths");
  const double lhs = kl_divergence(a, b);
  double rhs = 0.0;
  for (std::size_t depth = 0; depth < a.n(); ++depth) {
    for (const Prefix& w : prefixes_of_length(a.n(), depth)) {
      const double weight = conditional_mass(a, w);
      if (weight <= 0.0) continue;
      rhs += weight * bernoulli_kl(a.marginal(w), b.marginal(w));
    }
  }
  return detail::equal(lhs, rhs, 1e-9);
}

// ---------------------------------------------------------------------------
// Random instances.
// ---------------------------------------------------------------------------

// Normalized exponentials on a support of size k.
inline FiniteDistribution random_distribution(std::size_t k, RandomStream& rng) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (double& v : p) {
    v = -std::log1p(-rng.uniform());
    sum += v;
  }
  if (!(sum > 0.0)) {
    p.assign(k, 0.0);
    p[0] = sum = 1.0;
  }
  for (double& v : p) v /= sum;
  return FiniteDistribution(std::move(p));
}

inline std::size_t random_support(RandomStream& rng) {
  return 2 + static_cast<std::size_t>(rng.below(15));  // 2..16
}

// nu random, mu(x) = nu(x)(1 + (t/2)(u_x - E_nu[u])) with u_x in [-1, 1]:
// sums to 1 and stays within (1 +- t) nu(x) without renormalizing.
inline std::pair<FiniteDistribution, FiniteDistribution> random_ratio_pair(std::size_t k,
                                                                           double t,
                                                                           RandomStream& rng) {
  const FiniteDistribution nu = random_distribution(k, rng);
  std::vector<double> u(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    u[i] = 2.0 * rng.uniform() - 1.0;
    mean += nu[i] * u[i];
  }
  std::vector<double> mu(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mu[i] = nu[i] * (1.0 + 0.5 * t * (u[i] - mean));
    sum += mu[i];
  }
  for (double& v : mu) v /= sum;
  return {FiniteDistribution(std::move(mu)), nu};
}

struct SweepResult {
  std::string name;
  std::uint64_t instances = 0;
  std::uint64_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max of lhs - rhs seen
};

/// Runs every checker on `count` seeded random instances.
inline std::vector<SweepResult> run_lemma_sweep(std::uint64_t count, std::uint64_t seed) {
  std::vector<SweepResult> out;
  auto run = [&](const char* name, std::uint64_t key, auto&& one) {
    SweepResult res{name};
    RandomStream rng = RandomStream::keyed(seed, key);
    for (std::uint64_t i = 0; i < count; ++i) {
      const LemmaCheck c = one(rng);
      ++res.instances;
      if (!c.ok) ++res.violations;
      if (!std::isinf(c.rhs)) res.worst_margin = std::max(res.worst_margin, c.lhs - c.rhs);
    }
    out.push_back(res);
  };

  run("bounded_ratio_dkl", 1, [](RandomStream& rng) {
    const double t = 0.25 * rng.uniform();
    const auto [mu, nu] = random_ratio_pair(random_support(rng), t, rng);
    return check_bounded_ratio_dkl(mu, nu, t);
  });
  run("symmetric_chi_square", 2, [](RandomStream& rng) {
    const std::size_t k = random_support(rng);
    return check_symmetric_chi_square(random_distribution(k, rng), random_distribution(k, rng));
  });
  run("half_mixture_bias", 3, [](RandomStream& rng) {
    const std::size_t k = random_support(rng);
    const FiniteDistribution mu = random_distribution(k, rng);
    const FiniteDistribution nu = random_distribution(k, rng);
    const double r = 0.999 * (rng.uniform() - 0.5);
    return check_half_mixture_bias(mu, nu, r);
  });
  run("nonadaptive_run_kl", 4, [](RandomStream& rng) {
    std::vector<std::size_t> m(1 + rng.below(4));
    for (auto& v : m) v = static_cast<std::size_t>(rng.below(21));
    const double delta = rng.uniform() / 3.0;
    const double r = 0.499 * rng.uniform();
    return check_nonadaptive_run_kl(m, delta, r);
  });
  run("pinsker", 5, [](RandomStream& rng) {
    const std::size_t k = random_support(rng);
    return check_pinsker(random_distribution(k, rng), random_distribution(k, rng));
  });
  run("product_additivity", 6, [](RandomStream& rng) {
    const std::size_t k1 = random_support(rng);
    const std::size_t k2 = random_support(rng);
    const FiniteDistribution mu1 = random_distribution(k1, rng);
    const FiniteDistribution nu1 = random_distribution(k1, rng);
    const FiniteDistribution mu2 = random_distribution(k2, rng);
    const FiniteDistribution nu2 = random_distribution(k2, rng);
    return check_product_additivity(mu1, nu1, mu2, nu2);
  });
  run("chain_rule", 7, [](RandomStream& rng) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.below(8));
    const MarginalTree a = random_tree(n, 0.05, 0.95, rng);
    const MarginalTree b = random_tree(n, 0.05, 0.95, rng);
    return check_chain_rule(a, b);
  });
  return out;
}

}  // namespace pcsim
