#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"
#include "sqd/solver.hpp"
#include "sqd/subspace.hpp"

namespace sqd {

struct HCIOptions {
  double epsilon1 = 1e-4;
  int max_iterations = 50;
  double energy_tol = 1e-8;
  std::uint64_t max_dimension = 50'000'000;

  void validate() const {
    if (!(epsilon1 >= 0.0)) throw ConfigError("HCI: epsilon1 must be >= 0");
    if (!(energy_tol > 0.0)) throw ConfigError("HCI: energy_tol must be > 0");
    if (max_iterations < 1) throw ConfigError("HCI: max_iterations must be >= 1");
  }
};

/// Double-excitation targets per occupied orbital pair, by descending |coupling|.
///
/// For a same-spin pair (i < j) the magnitude is |(ai|bj) - (aj|bi)| over
/// a < b; for an opposite-spin pair (i alpha, j beta) it is |(ai|bj)|.
/// These magnitudes are exactly |<d'|H|d>| for the corresponding double.
class HeatBathTable {
 public:
  struct Target {
    double magnitude;
    int a, b;
  };

  explicit HeatBathTable(const ActiveSpaceHamiltonian& H) : n_(H.n_orb()) {
    const auto nn = static_cast<std::size_t>(n_ * n_);
    same_.resize(nn);
    opposite_.resize(nn);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        auto& opp = opposite_[index(i, j)];
        for (int a = 0; a < n_; ++a)
          for (int b = 0; b < n_; ++b) {
            if (a == i || b == j) continue;
            const double v = std::abs(H.eri(a, i, b, j));
            if (v != 0.0) opp.push_back({v, a, b});
          }
        sort(opp);
        if (i >= j) continue;
        auto& same = same_[index(i, j)];
        for (int a = 0; a < n_; ++a)
          for (int b = a + 1; b < n_; ++b) {
            if (a == i || a == j || b == i || b == j) continue;
            const double v = std::abs(H.eri(a, i, b, j) - H.eri(a, j, b, i));
            if (v != 0.0) same.push_back({v, a, b});
          }
        sort(same);
      }
  }

  const std::vector<Target>& same_spin(int i, int j) const { return same_[index(i, j)]; }
  const std::vector<Target>& opposite_spin(int i, int j) const { return opposite_[index(i, j)]; }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }
  static void sort(std::vector<Target>& v) {
    std::stable_sort(v.begin(), v.end(), [](const Target& x, const Target& y) { return x.magnitude > y.magnitude; });
  }

  int n_;
  std::vector<std::vector<Target>> same_;
  std::vector<std::vector<Target>> opposite_;
};

/// Calls f(d') for every single or double d' of d with |<d'|H|d>| * |c| >= epsilon.
template <class F>
void heat_bath_select(const ActiveSpaceHamiltonian& H, const HeatBathTable& table, const Determinant& d, double c,
                      double epsilon, F&& f) {
  const double weight = std::abs(c);
  const auto passes = [&](double magnitude) { return magnitude * weight >= epsilon; };
  const auto move = [](SpinString s, int from, int to) { return (s & ~(SpinString{1} << from)) | (SpinString{1} << to); };
  const int n = H.n_orb();
  const SpinString full = low_mask(n);
  const auto occ_a = set_bits(d.alpha);
  const auto occ_b = set_bits(d.beta);

  for (int spin = 0; spin < 2; ++spin) {
    const SpinString s = spin == 0 ? d.alpha : d.beta;
    const SpinString o = spin == 0 ? d.beta : d.alpha;
    for (int i : spin == 0 ? occ_a : occ_b)
      for (int a : set_bits(full & ~s))
        if (const double v = std::abs(detail::single_value(H, s, o, i, a)); v != 0.0 && passes(v))
          f(spin == 0 ? Determinant{move(s, i, a), d.beta} : Determinant{d.alpha, move(s, i, a)});
  }

  const auto same = [&](SpinString s, const std::vector<int>& occ, bool alpha) {
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y)
        for (const auto& t : table.same_spin(occ[x], occ[y])) {
          if (!passes(t.magnitude)) break;
          if (is_set(s, t.a) || is_set(s, t.b)) continue;
          const SpinString e = move(move(s, occ[x], t.a), occ[y], t.b);
          f(alpha ? Determinant{e, d.beta} : Determinant{d.alpha, e});
        }
  };
  same(d.alpha, occ_a, true);
  same(d.beta, occ_b, false);
  for (int i : occ_a)
    for (int j : occ_b)
      for (const auto& t : table.opposite_spin(i, j)) {
        if (!passes(t.magnitude)) break;
        if (is_set(d.alpha, t.a) || is_set(d.beta, t.b)) continue;
        f(Determinant{move(d.alpha, i, t.a), move(d.beta, j, t.b)});
      }
}

/// Variational heat-bath selected CI starting from the reference determinant.
///
/// `iterations` of the result counts selection rounds.
inline SubspaceResult hci_variational(const ActiveSpaceHamiltonian& H, const HCIOptions& opts = {}) {
  opts.validate();
  const HeatBathTable table(H);
  std::set<Determinant> space{H.hartree_fock()};
  auto current = solve_subspace(H, {space.begin(), space.end()});
  int rounds = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const std::size_t before = space.size();
    for (std::size_t k = 0; k < current.basis.size(); ++k) {
      heat_bath_select(H, table, current.basis[k], current.coefficients[k], opts.epsilon1, [&](const Determinant& e) {
        space.insert(e);
        if (space.size() > opts.max_dimension) throw CapacityError("HCI: selected space exceeds dimension cap");
      });
    }
    ++rounds;
    if (space.size() == before) break;
    const double previous = current.energy;
    current = solve_subspace(H, {space.begin(), space.end()});
    if (std::abs(current.energy - previous) < opts.energy_tol) break;
  }
  current.iterations = rounds;
  return current;
}

/// One excitation-extension step on a prior variational state.
inline SubspaceResult ext_hci(const ActiveSpaceHamiltonian& H, const SubspaceResult& prior,
                              const ExtensionThresholds& thresholds = {}, std::uint64_t max_dimension = 50'000'000) {
  auto extended = extend_subspace(prior.coefficients, prior.basis, H.n_orb(), thresholds, max_dimension);
  std::vector<Determinant> own = prior.basis;
  std::sort(own.begin(), own.end());
  std::vector<Determinant> merged;
  merged.reserve(extended.size() + own.size());
  std::set_union(extended.begin(), extended.end(), own.begin(), own.end(), std::back_inserter(merged));
  if (merged.size() > max_dimension) throw CapacityError("Ext-HCI: extended basis exceeds dimension cap");
  auto r = solve_subspace(H, std::move(merged));
  r.iterations = 1;
  return r;
}

}  // namespace sqd
