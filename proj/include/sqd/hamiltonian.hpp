#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"

namespace sqd {

/// Active-space electronic Hamiltonian with real integrals.
///
///   H = E0 + sum_{pq,s} h_pq a+_ps a_qs
///          + 1/2 sum_{pqrs,st} (pq|rs) a+_ps a+_rt a_st a_qs
///
/// Two-electron integrals are in chemists' notation and stored densely with
/// all eight permutational images populated. Spin orbitals are ordered with
/// every alpha orbital (ascending) before every beta orbital; this fixes all
/// fermionic signs below.
class ActiveSpaceHamiltonian {
 public:
  ActiveSpaceHamiltonian() = default;

  ActiveSpaceHamiltonian(int n_orb, int n_alpha, int n_beta, double core_energy = 0.0)
      : n_orb_(n_orb), n_alpha_(n_alpha), n_beta_(n_beta), core_energy_(core_energy) {
    if (n_orb < 1 || n_orb > kMaxOrbitals)
      throw ConfigError("number of orbitals must be in [1, 64], got " + std::to_string(n_orb));
    if (n_alpha <= 0 || n_beta <= 0 || n_alpha > n_orb || n_beta > n_orb)
      throw ConfigError("electron counts must satisfy 0 < n_alpha, n_beta <= n_orb");
    const auto n = static_cast<std::size_t>(n_orb);
    one_body_.assign(n * n, 0.0);
    two_body_.assign(n * n * n * n, 0.0);
  }

  [[nodiscard]] int n_orb() const { return n_orb_; }
  [[nodiscard]] int n_alpha() const { return n_alpha_; }
  [[nodiscard]] int n_beta() const { return n_beta_; }
  [[nodiscard]] double core_energy() const { return core_energy_; }
  void set_core_energy(double e) { core_energy_ = e; }

  [[nodiscard]] double h(int p, int q) const { return one_body_[idx2(p, q)]; }
  [[nodiscard]] double eri(int p, int q, int r, int s) const { return two_body_[idx4(p, q, r, s)]; }

  /// Sets h_pq and h_qp.
  void set_one_body(int p, int q, double v) {
    one_body_[idx2(p, q)] = v;
    one_body_[idx2(q, p)] = v;
  }

  /// Sets (pq|rs) together with its seven symmetry images.
  void set_two_body(int p, int q, int r, int s, double v) {
    for (auto [a, b, c, d] : {std::array{p, q, r, s}, std::array{q, p, r, s}, std::array{p, q, s, r},
                              std::array{q, p, s, r}, std::array{r, s, p, q}, std::array{s, r, p, q},
                              std::array{r, s, q, p}, std::array{s, r, q, p}})
      two_body_[idx4(a, b, c, d)] = v;
  }

  [[nodiscard]] std::span<const double> one_body() const { return one_body_; }
  [[nodiscard]] std::span<const double> two_body() const { return two_body_; }

  /// Throws ConfigError if a symmetry invariant is violated beyond tol.
  void validate(double tol = 1e-12) const {
    for (int p = 0; p < n_orb_; ++p)
      for (int q = 0; q < n_orb_; ++q)
        if (std::abs(h(p, q) - h(q, p)) > tol) throw ConfigError("one-body integrals are not symmetric");
    for (int p = 0; p < n_orb_; ++p)
      for (int q = 0; q < n_orb_; ++q)
        for (int r = 0; r < n_orb_; ++r)
          for (int s = 0; s < n_orb_; ++s) {
            const double v = eri(p, q, r, s);
            if (std::abs(v - eri(q, p, r, s)) > tol || std::abs(v - eri(p, q, s, r)) > tol ||
                std::abs(v - eri(r, s, p, q)) > tol)
              throw ConfigError("two-body integrals lack 8-fold symmetry");
          }
  }

  [[nodiscard]] Determinant hartree_fock() const { return sqd::hartree_fock(n_alpha_, n_beta_); }

  friend bool operator==(const ActiveSpaceHamiltonian&, const ActiveSpaceHamiltonian&) = default;

 private:
  [[nodiscard]] std::size_t idx2(int p, int q) const {
    return static_cast<std::size_t>(p) * static_cast<std::size_t>(n_orb_) + static_cast<std::size_t>(q);
  }
  [[nodiscard]] std::size_t idx4(int p, int q, int r, int s) const {
    const auto n = static_cast<std::size_t>(n_orb_);
    return ((static_cast<std::size_t>(p) * n + static_cast<std::size_t>(q)) * n + static_cast<std::size_t>(r)) * n +
           static_cast<std::size_t>(s);
  }

  int n_orb_ = 0;
  int n_alpha_ = 0;
  int n_beta_ = 0;
  double core_energy_ = 0.0;
  std::vector<double> one_body_;
  std::vector<double> two_body_;
};

// Slater-Condon rules --------------------------------------------------------

/// <d|H|d>.
inline double diagonal_element(const ActiveSpaceHamiltonian& H, const Determinant& d) {
  double e = H.core_energy();
  const auto occ_a = set_bits(d.alpha);
  const auto occ_b = set_bits(d.beta);
  for (int p : occ_a) e += H.h(p, p);
  for (int p : occ_b) e += H.h(p, p);
  auto same_spin = [&](const std::vector<int>& occ) {
    double acc = 0.0;
    for (std::size_t i = 0; i < occ.size(); ++i)
      for (std::size_t j = i + 1; j < occ.size(); ++j) {
        const int p = occ[i];
        const int q = occ[j];
        acc += H.eri(p, p, q, q) - H.eri(p, q, q, p);
      }
    return acc;
  };
  e += same_spin(occ_a) + same_spin(occ_b);
  for (int p : occ_a)
    for (int q : occ_b) e += H.eri(p, p, q, q);
  return e;
}

namespace detail {

// Unsigned coupling for a single excitation from -> to in `spin` string of
// `ket`; `other` is the opposite-spin string.
inline double single_value(const ActiveSpaceHamiltonian& H, SpinString spin, SpinString other, int from, int to) {
  double v = H.h(to, from);
  for (SpinString s = spin; s; s &= s - 1) {
    const int j = std::countr_zero(s);
    if (j == from) continue;
    v += H.eri(to, from, j, j) - H.eri(to, j, j, from);
  }
  for (SpinString s = other; s; s &= s - 1) {
    const int j = std::countr_zero(s);
    v += H.eri(to, from, j, j);
  }
  return v;
}

}  // namespace detail

/// <bra|H|ket>.
inline double matrix_element(const ActiveSpaceHamiltonian& H, const Determinant& bra, const Determinant& ket) {
  if (bra.n_alpha() != ket.n_alpha() || bra.n_beta() != ket.n_beta()) return 0.0;
  const SpinString xa = bra.alpha ^ ket.alpha;
  const SpinString xb = bra.beta ^ ket.beta;
  const int na = std::popcount(xa) / 2;
  const int nb = std::popcount(xb) / 2;
  const int degree = na + nb;
  if (degree == 0) return diagonal_element(H, ket);
  if (degree > 2) return 0.0;

  if (degree == 1) {
    const bool alpha = na == 1;
    const SpinString k = alpha ? ket.alpha : ket.beta;
    const SpinString x = alpha ? xa : xb;
    const int from = std::countr_zero(x & k);
    const int to = std::countr_zero(x & ~k);
    return excitation_sign(k, from, to) * detail::single_value(H, k, alpha ? ket.beta : ket.alpha, from, to);
  }

  if (na == 1 && nb == 1) {
    const int i = std::countr_zero(xa & ket.alpha);
    const int a = std::countr_zero(xa & ~ket.alpha);
    const int j = std::countr_zero(xb & ket.beta);
    const int b = std::countr_zero(xb & ~ket.beta);
    return excitation_sign(ket.alpha, i, a) * excitation_sign(ket.beta, j, b) * H.eri(a, i, b, j);
  }

  // Same-spin double.
  const SpinString k = na == 2 ? ket.alpha : ket.beta;
  const SpinString x = na == 2 ? xa : xb;
  SpinString holes = x & k;
  SpinString parts = x & ~k;
  const int i = std::countr_zero(holes);
  holes &= holes - 1;
  const int j = std::countr_zero(holes);
  const int a = std::countr_zero(parts);
  parts &= parts - 1;
  const int b = std::countr_zero(parts);
  const double s1 = excitation_sign(k, i, a);
  const SpinString k1 = (k & ~(SpinString{1} << i)) | (SpinString{1} << a);
  const double s2 = excitation_sign(k1, j, b);
  return s1 * s2 * (H.eri(a, i, b, j) - H.eri(a, j, b, i));
}

// Excitation generation -----------------------------------------------------

/// Calls f(determinant, value) for every single and double excitation of d
/// with its exact signed coupling <d'|H|d>. Values may be exactly zero.
template <class F>
void for_each_excitation(const ActiveSpaceHamiltonian& H, const Determinant& d, F&& f) {
  const int n = H.n_orb();
  const SpinString full = low_mask(n);
  const auto occ_a = set_bits(d.alpha);
  const auto occ_b = set_bits(d.beta);
  const auto vir_a = set_bits(full & ~d.alpha);
  const auto vir_b = set_bits(full & ~d.beta);

  auto singles = [&](SpinString spin, SpinString other, const std::vector<int>& occ, const std::vector<int>& vir,
                     bool alpha) {
    for (int i : occ)
      for (int a : vir) {
        const SpinString s = (spin & ~(SpinString{1} << i)) | (SpinString{1} << a);
        const double v = excitation_sign(spin, i, a) * detail::single_value(H, spin, other, i, a);
        f(alpha ? Determinant{s, d.beta} : Determinant{d.alpha, s}, v);
      }
  };
  singles(d.alpha, d.beta, occ_a, vir_a, true);
  singles(d.beta, d.alpha, occ_b, vir_b, false);

  auto same_doubles = [&](SpinString spin, const std::vector<int>& occ, const std::vector<int>& vir, bool alpha) {
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y) {
        const int i = occ[x];
        const int j = occ[y];
        for (std::size_t u = 0; u < vir.size(); ++u)
          for (std::size_t w = u + 1; w < vir.size(); ++w) {
            const int a = vir[u];
            const int b = vir[w];
            const double mag = H.eri(a, i, b, j) - H.eri(a, j, b, i);
            const SpinString k1 = (spin & ~(SpinString{1} << i)) | (SpinString{1} << a);
            const SpinString k2 = (k1 & ~(SpinString{1} << j)) | (SpinString{1} << b);
            const double v = excitation_sign(spin, i, a) * excitation_sign(k1, j, b) * mag;
            f(alpha ? Determinant{k2, d.beta} : Determinant{d.alpha, k2}, v);
          }
      }
  };
  same_doubles(d.alpha, occ_a, vir_a, true);
  same_doubles(d.beta, occ_b, vir_b, false);

  for (int i : occ_a)
    for (int a : vir_a) {
      const SpinString sa = (d.alpha & ~(SpinString{1} << i)) | (SpinString{1} << a);
      const double sign_a = excitation_sign(d.alpha, i, a);
      for (int j : occ_b)
        for (int b : vir_b) {
          const SpinString sb = (d.beta & ~(SpinString{1} << j)) | (SpinString{1} << b);
          f(Determinant{sa, sb}, sign_a * excitation_sign(d.beta, j, b) * H.eri(a, i, b, j));
        }
    }
}

/// Singles and doubles of d whose coupling magnitude is at least cutoff.
/// Exact zeros are never returned.
inline std::vector<std::pair<Determinant, double>> connected_doubles(const ActiveSpaceHamiltonian& H,
                                                                     const Determinant& d, double cutoff) {
  if (!(cutoff >= 0.0)) throw ConfigError("connected_doubles: cutoff must be >= 0");
  std::vector<std::pair<Determinant, double>> out;
  for_each_excitation(H, d, [&](const Determinant& e, double v) {
    if (v != 0.0 && std::abs(v) >= cutoff) out.emplace_back(e, v);
  });
  return out;
}

}  // namespace sqd
