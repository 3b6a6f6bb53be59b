#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcsim/errors.hpp"

namespace pcsim {

using BitSpan = std::span<const std::uint8_t>;

namespace detail {

inline std::vector<std::uint8_t> parse_bits(std::string_view s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') {
      throw domain_error("bit string may only contain '0' and '1'");
    }
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return bits;
}

inline void check_bits(const std::vector<std::uint8_t>& bits) {
  for (std::uint8_t b : bits) {
    if (b > 1) throw domain_error("bit values must be 0 or 1");
  }
}

inline std::string format_bits(BitSpan bits) {
  std::string s;
  s.reserve(bits.size());
  for (std::uint8_t b : bits) s.push_back(static_cast<char>('0' + b));
  return s;
}

}  // namespace detail

class Prefix;

/// An element of {0,1}^n.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    detail::check_bits(bits_);
  }
  static BitString from_string(std::string_view s) {
    return BitString(detail::parse_bits(s));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  int operator[](std::size_t i) const { return bits_[i]; }
  BitSpan bits() const noexcept { return bits_; }
  std::string to_string() const { return detail::format_bits(bits_); }

  // First k bits as a prefix of the ambient space {0,1}^size(); k < size().
  Prefix prefix(std::size_t k) const;
  bool has_prefix(BitSpan w) const noexcept {
    if (w.size() > bits_.size()) return false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (bits_[i] != w[i]) return false;
    }
    return true;
  }

  // Index of this element in lexicographic order; size() <= 63.
  std::uint64_t code() const noexcept {
    std::uint64_t c = 0;
    for (std::uint8_t b : bits_) c = (c << 1) | b;
    return c;
  }
  static BitString from_code(std::uint64_t code, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      bits[n - 1 - i] = static_cast<std::uint8_t>((code >> i) & 1U);
    }
    return BitString(std::move(bits));
  }

  friend bool operator==(const BitString&, const BitString&) = default;
  friend auto operator<=>(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// A true prefix w of strings in {0,1}^n, i.e. 0 <= |w| < n. The empty
/// prefix is valid and denotes the whole domain.
class Prefix {
 public:
  explicit Prefix(std::size_t n) : n_(n) {
    if (n == 0) throw domain_error("ambient length must be positive");
  }
  Prefix(std::size_t n, std::vector<std::uint8_t> bits)
      : n_(n), bits_(std::move(bits)) {
    if (n == 0) throw domain_error("ambient length must be positive");
    if (bits_.size() >= n_) {
      throw domain_error("prefix length must be below the ambient length");
    }
    detail::check_bits(bits_);
  }
  static Prefix from_string(std::size_t n, std::string_view s) {
    return Prefix(n, detail::parse_bits(s));
  }

  std::size_t ambient() const noexcept { return n_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  int operator[](std::size_t i) const { return bits_[i]; }
  BitSpan bits() const noexcept { return bits_; }
  std::string to_string() const { return detail::format_bits(bits_); }

  // w -> wb; requires |w| + 1 < n.
  Prefix child(int b) const {
    std::vector<std::uint8_t> bits = bits_;
    bits.push_back(static_cast<std::uint8_t>(b & 1));
    return Prefix(n_, std::move(bits));
  }
  // The full string wb; requires |w| + 1 == n.
  BitString leaf(int b) const {
    std::vector<std::uint8_t> bits = bits_;
    bits.push_back(static_cast<std::uint8_t>(b & 1));
    if (bits.size() != n_) throw domain_error("leaf() needs |w| = n - 1");
    return BitString(std::move(bits));
  }

  friend bool operator==(const Prefix&, const Prefix&) = default;
  friend auto operator<=>(const Prefix& a, const Prefix& b) {
    if (auto c = a.n_ <=> b.n_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  std::size_t n_;
  std::vector<std::uint8_t> bits_;
};

inline Prefix BitString::prefix(std::size_t k) const {
  if (k >= bits_.size()) {
    throw domain_error("prefix length must be below the string length");
  }
  return Prefix(bits_.size(),
                std::vector<std::uint8_t>(bits_.begin(), bits_.begin() + k));
}

// Every prefix of length `depth`, in lexicographic order; depth < n, n <= 30.
inline std::vector<Prefix> prefixes_of_length(std::size_t n,
                                              std::size_t depth) {
  std::vector<Prefix> out;
  out.reserve(std::size_t{1} << depth);
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << depth); ++c) {
    std::vector<std::uint8_t> bits(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      bits[depth - 1 - i] = static_cast<std::uint8_t>((c >> i) & 1U);
    }
    out.emplace_back(n, std::move(bits));
  }
  return out;
}

}  // namespace pcsim
