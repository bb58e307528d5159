#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sqd/counts.hpp"
#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"
#include "sqd/rng.hpp"

namespace sqd {

/// Calls f(d') for every single excitation of d, and every double when `doubles` is set.
template <class F>
void for_each_excited(const Determinant& d, int n_orb, bool doubles, F&& f) {
  const SpinString full = low_mask(n_orb);
  const auto occ_a = set_bits(d.alpha);
  const auto occ_b = set_bits(d.beta);
  const auto vir_a = set_bits(full & ~d.alpha);
  const auto vir_b = set_bits(full & ~d.beta);
  const auto move = [](SpinString s, int from, int to) { return (s & ~(SpinString{1} << from)) | (SpinString{1} << to); };

  for (int i : occ_a)
    for (int a : vir_a) f(Determinant{move(d.alpha, i, a), d.beta});
  for (int i : occ_b)
    for (int a : vir_b) f(Determinant{d.alpha, move(d.beta, i, a)});
  if (!doubles) return;

  const auto same_spin = [&](SpinString s, const std::vector<int>& occ, const std::vector<int>& vir, auto&& emit) {
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y)
        for (std::size_t u = 0; u < vir.size(); ++u)
          for (std::size_t w = u + 1; w < vir.size(); ++w)
            emit(move(move(s, occ[x], vir[u]), occ[y], vir[w]));
  };
  same_spin(d.alpha, occ_a, vir_a, [&](SpinString s) { f(Determinant{s, d.beta}); });
  same_spin(d.beta, occ_b, vir_b, [&](SpinString s) { f(Determinant{d.alpha, s}); });
  for (int i : occ_a)
    for (int a : vir_a) {
      const SpinString sa = move(d.alpha, i, a);
      for (int j : occ_b)
        for (int b : vir_b) f(Determinant{sa, move(d.beta, j, b)});
    }
}

/// Split shots into those with the target per-spin weights and the rest.
inline std::pair<BitstringCounts, BitstringCounts> partition_by_hamming(const BitstringCounts& counts, int n_alpha,
                                                                        int n_beta) {
  BitstringCounts valid(counts.n_orb()), invalid(counts.n_orb());
  for (const auto& [d, c] : counts.entries()) {
    if (d.n_alpha() == n_alpha && d.n_beta() == n_beta)
      valid.add(d, c);
    else
      invalid.add(d, c);
  }
  return {std::move(valid), std::move(invalid)};
}

/// Shot-weighted mean occupation of each spin orbital (alpha 0..n-1, beta n..2n-1).
inline std::vector<double> empirical_occupations(const BitstringCounts& counts) {
  const int n = counts.n_orb();
  std::vector<double> occ(static_cast<std::size_t>(2 * n), 0.0);
  if (counts.total_shots() == 0) return occ;
  for (const auto& [d, c] : counts.entries()) {
    for (int p : set_bits(d.alpha)) occ[static_cast<std::size_t>(p)] += static_cast<double>(c);
    for (int p : set_bits(d.beta)) occ[static_cast<std::size_t>(n + p)] += static_cast<double>(c);
  }
  for (auto& x : occ) x /= static_cast<double>(counts.total_shots());
  return occ;
}

inline constexpr double kRecoveryFloor = 1e-6;

namespace detail {

// Moves one spin half to the target weight by weighted random bit flips.
inline SpinString repair_spin(SpinString s, int target, std::span<const double> occ, CounterRng& rng) {
  const int n = static_cast<int>(occ.size());
  std::vector<double> w(occ.size());
  while (std::popcount(s) != target) {
    const bool too_many = std::popcount(s) > target;
    double total = 0.0;
    for (int p = 0; p < n; ++p) {
      const bool set = is_set(s, p);
      const double x = occ[static_cast<std::size_t>(p)];
      w[static_cast<std::size_t>(p)] = (set == too_many) ? (too_many ? 1.0 - x : x) + kRecoveryFloor : 0.0;
      total += w[static_cast<std::size_t>(p)];
    }
    double u = rng.uniform() * total;
    int pick = -1;
    for (int p = 0; p < n; ++p) {
      if (w[static_cast<std::size_t>(p)] == 0.0) continue;
      pick = p;
      u -= w[static_cast<std::size_t>(p)];
      if (u < 0.0) break;
    }
    s ^= SpinString{1} << pick;
  }
  return s;
}

}  // namespace detail

/// Repairs every shot to (n_alpha, n_beta) using reference occupations.
///
/// A spin half with too many electrons loses a set bit chosen with weight
/// 1 - <n_p> + 1e-6; one with too few gains a clear bit with weight
/// <n_p> + 1e-6. Shots are processed in fixed blocks with their own streams.
inline BitstringCounts recover_configurations(const BitstringCounts& invalid, std::span<const double> occupations,
                                              int n_alpha, int n_beta, std::uint64_t seed,
                                              std::uint64_t iteration = 0) {
  const int n = invalid.n_orb();
  if (occupations.size() != static_cast<std::size_t>(2 * n))
    throw ConfigError("recovery: occupation vector must have 2 * n_orb entries");
  for (double x : occupations)
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("recovery: occupations must lie in [0, 1]");
  if (n_alpha < 0 || n_alpha > n || n_beta < 0 || n_beta > n) throw ConfigError("recovery: invalid target counts");
  const auto occ_a = occupations.subspan(0, static_cast<std::size_t>(n));
  const auto occ_b = occupations.subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(n));

  std::vector<std::pair<Determinant, std::uint64_t>> items(invalid.entries().begin(), invalid.entries().end());
  std::vector<std::uint64_t> prefix(items.size() + 1, 0);
  for (std::size_t i = 0; i < items.size(); ++i) prefix[i + 1] = prefix[i] + items[i].second;
  const std::uint64_t total = prefix.back();
  const std::uint64_t n_blocks = (total + kShotBlock - 1) / kShotBlock;

  std::vector<std::map<Determinant, std::uint64_t>> partial(n_blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kShotBlock;
    const std::uint64_t end = std::min(total, begin + kShotBlock);
    CounterRng rng(seed, stream_id(StreamPurpose::kRecovery, iteration, static_cast<std::uint64_t>(b)));
    auto& local = partial[static_cast<std::size_t>(b)];
    auto item = static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), begin) - prefix.begin()) - 1;
    for (std::uint64_t shot = begin; shot < end; ++shot) {
      while (shot >= prefix[item + 1]) ++item;
      const Determinant& d = items[item].first;
      const SpinString a = detail::repair_spin(d.alpha, n_alpha, occ_a, rng);
      const SpinString bta = detail::repair_spin(d.beta, n_beta, occ_b, rng);
      ++local[Determinant{a, bta}];
    }
  }
  BitstringCounts out(n);
  for (const auto& local : partial)
    for (const auto& [d, c] : local) out.add(d, c);
  return out;
}

/// Determinant basis spanned by the samples, sorted by (alpha, beta).
///
/// With closure the basis is the product of all sampled alpha strings with
/// all sampled beta strings; without it, just the distinct samples.
inline std::vector<Determinant> build_subspace(const BitstringCounts& samples, bool closure,
                                               std::uint64_t max_dimension = 50'000'000) {
  if (samples.empty()) throw EmptySampleError("build_subspace: no samples");
  std::vector<Determinant> basis;
  if (!closure) {
    if (samples.size() > max_dimension) throw CapacityError("build_subspace: basis exceeds dimension cap");
    basis.reserve(samples.size());
    for (const auto& [d, c] : samples.entries()) basis.push_back(d);
    return basis;
  }
  std::set<SpinString> alphas, betas;
  for (const auto& [d, c] : samples.entries()) {
    alphas.insert(d.alpha);
    betas.insert(d.beta);
  }
  if (static_cast<double>(alphas.size()) * static_cast<double>(betas.size()) > static_cast<double>(max_dimension))
    throw CapacityError("build_subspace: product basis exceeds dimension cap");
  basis.reserve(alphas.size() * betas.size());
  for (SpinString a : alphas)
    for (SpinString b : betas) basis.push_back({a, b});
  return basis;
}

struct ExtensionThresholds {
  double discard_below = 1e-2;
  double doubles_above = 1e-1;

  void validate() const {
    if (!(discard_below >= 0.0 && doubles_above >= discard_below))
      throw ConfigError("extension thresholds: need 0 <= discard_below <= doubles_above");
  }
};

/// Retained configurations plus their singles, plus doubles of the large ones.
///
/// Retained means |c| >= discard_below; doubles are generated from |c| >
/// doubles_above. Output is sorted and duplicate-free.
inline std::vector<Determinant> extend_subspace(std::span<const double> coefficients,
                                                const std::vector<Determinant>& basis, int n_orb,
                                                const ExtensionThresholds& thresholds,
                                                std::uint64_t max_dimension = 50'000'000) {
  thresholds.validate();
  if (coefficients.size() != basis.size()) throw ConfigError("extend_subspace: coefficient/basis size mismatch");
  std::unordered_set<Determinant, DeterminantHash> out;
  const auto insert = [&](const Determinant& d) {
    out.insert(d);
    if (out.size() > max_dimension) throw CapacityError("extend_subspace: extended basis exceeds dimension cap");
  };
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double mag = std::abs(coefficients[i]);
    if (mag < thresholds.discard_below) continue;
    insert(basis[i]);
    for_each_excited(basis[i], n_orb, mag > thresholds.doubles_above, insert);
  }
  std::vector<Determinant> sorted(out.begin(), out.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace sqd
