#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sqd/errors.hpp"

namespace sqd {

/// Occupation string of one spin species; bit p set means orbital p occupied.
using SpinString = std::uint64_t;

inline constexpr int kMaxOrbitals = 64;

/// One electronic configuration: an alpha and a beta occupation string.
///
/// Ordering is lexicographic on (alpha, beta) numeric value, which is the
/// canonical basis ordering used throughout the library.
struct Determinant {
  SpinString alpha = 0;
  SpinString beta = 0;

  friend constexpr auto operator<=>(const Determinant&, const Determinant&) = default;

  [[nodiscard]] constexpr int n_alpha() const { return std::popcount(alpha); }
  [[nodiscard]] constexpr int n_beta() const { return std::popcount(beta); }
};

struct DeterminantHash {
  std::size_t operator()(const Determinant& d) const noexcept {
    std::uint64_t h = d.alpha * 0x9E3779B97F4A7C15ULL;
    h ^= (d.beta + 0x632BE59BD9B4E019ULL) + (h << 6) + (h >> 2);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 29;
    return static_cast<std::size_t>(h);
  }
};

constexpr SpinString low_mask(int n) {
  return n >= 64 ? ~SpinString{0} : ((SpinString{1} << n) - 1);
}

constexpr bool is_set(SpinString s, int p) { return ((s >> p) & 1U) != 0; }

/// Number of set bits strictly between positions lo and hi (lo < hi).
constexpr int bits_between(SpinString s, int lo, int hi) {
  if (hi - lo <= 1) return 0;
  const SpinString mask = low_mask(hi) & ~low_mask(lo + 1);
  return std::popcount(s & mask);
}

/// Fermionic sign of a^dagger_to a_from acting on string s (from occupied, to empty).
constexpr double excitation_sign(SpinString s, int from, int to) {
  const int lo = from < to ? from : to;
  const int hi = from < to ? to : from;
  return (bits_between(s, lo, hi) & 1) ? -1.0 : 1.0;
}

/// Indices of the set bits of s, ascending.
inline std::vector<int> set_bits(SpinString s) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(std::popcount(s)));
  while (s) {
    out.push_back(std::countr_zero(s));
    s &= s - 1;
  }
  return out;
}

/// Lowest-k-orbitals string (the restricted Hartree-Fock occupation).
constexpr SpinString lowest_orbitals(int k) { return low_mask(k); }

inline Determinant hartree_fock(int n_alpha, int n_beta) {
  return {lowest_orbitals(n_alpha), lowest_orbitals(n_beta)};
}

/// Binomial coefficient with saturation at UINT64_MAX.
constexpr std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > ~std::uint64_t{0}) return ~std::uint64_t{0};
  }
  return static_cast<std::uint64_t>(r);
}

/// All n-orbital strings with k electrons in ascending numeric order.
inline std::vector<SpinString> enumerate_strings(int n, int k) {
  if (n < 0 || n > kMaxOrbitals || k < 0 || k > n)
    throw ConfigError("enumerate_strings: invalid (n, k)");
  std::vector<SpinString> out;
  out.reserve(binomial(n, k));
  if (k == 0) {
    out.push_back(0);
    return out;
  }
  SpinString s = low_mask(k);
  const SpinString limit = low_mask(n);
  while (true) {
    out.push_back(s);
    if (s == (limit & ~low_mask(n - k))) break;
    // Gosper's hack: next integer with the same popcount.
    const SpinString c = s & (~s + 1);
    const SpinString r = s + c;
    s = (((r ^ s) >> 2) / c) | r;
  }
  return out;
}

/// Position of s among all strings of the same popcount in ascending order.
inline std::uint64_t string_rank(SpinString s) {
  std::uint64_t rank = 0;
  int k = 1;
  while (s) {
    const int p = std::countr_zero(s);
    rank += binomial(p, k);
    ++k;
    s &= s - 1;
  }
  return rank;
}

/// Complete (n_alpha, n_beta) sector in canonical order.
inline std::vector<Determinant> sector_basis(int n_orb, int n_alpha, int n_beta) {
  const auto as = enumerate_strings(n_orb, n_alpha);
  const auto bs = enumerate_strings(n_orb, n_beta);
  std::vector<Determinant> out;
  out.reserve(as.size() * bs.size());
  for (auto a : as)
    for (auto b : bs) out.push_back({a, b});
  return out;
}

/// Text form with bit 0 leftmost: alpha bits [0, n) followed by beta bits [n, 2n).
inline std::string to_bitstring(const Determinant& d, int n_orb) {
  std::string s(static_cast<std::size_t>(2 * n_orb), '0');
  for (int p = 0; p < n_orb; ++p) {
    if (is_set(d.alpha, p)) s[static_cast<std::size_t>(p)] = '1';
    if (is_set(d.beta, p)) s[static_cast<std::size_t>(n_orb + p)] = '1';
  }
  return s;
}

inline Determinant from_bitstring(std::string_view text) {
  if (text.size() % 2 != 0 || text.size() > 2 * kMaxOrbitals)
    throw ParseError("bitstring length must be even and at most 128: '" + std::string(text) + "'");
  const int n = static_cast<int>(text.size() / 2);
  Determinant d;
  for (int p = 0; p < 2 * n; ++p) {
    const char c = text[static_cast<std::size_t>(p)];
    if (c != '0' && c != '1') throw ParseError("invalid character in bitstring '" + std::string(text) + "'");
    if (c == '1') {
      if (p < n)
        d.alpha |= SpinString{1} << p;
      else
        d.beta |= SpinString{1} << (p - n);
    }
  }
  return d;
}

}  // namespace sqd

template <>
struct std::hash<sqd::Determinant> : sqd::DeterminantHash {};
