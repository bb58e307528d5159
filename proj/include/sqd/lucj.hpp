#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"
#include "sqd/linalg.hpp"

namespace sqd {

/// One ansatz layer: an orbital rotation generator and a density-density coupling.
///
/// K is n x n antisymmetric and acts identically on both spins. J is 2n x 2n
/// symmetric over spin orbitals, alpha p -> p and beta p -> n + p. With
/// `conjugated` the layer is e^{-K} e^{iJ} e^{K}; otherwise e^{iJ} e^{K}.
struct LUCJLayer {
  Eigen::MatrixXd K;
  Eigen::MatrixXd J;
  bool conjugated = false;
};

struct LUCJParams {
  std::vector<LUCJLayer> layers;
  std::optional<Eigen::MatrixXd> final_rotation;

  void validate(int n_orb) const {
    const auto check_k = [n_orb](const Eigen::MatrixXd& K) {
      if (K.rows() != n_orb || K.cols() != n_orb) throw ConfigError("LUCJ: K must be n_orb x n_orb");
      if ((K + K.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("LUCJ: K is not antisymmetric");
    };
    for (const auto& layer : layers) {
      check_k(layer.K);
      if (layer.J.rows() != 2 * n_orb || layer.J.cols() != 2 * n_orb)
        throw ConfigError("LUCJ: J must be 2 n_orb x 2 n_orb");
      if ((layer.J - layer.J.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("LUCJ: J is not symmetric");
    }
    if (final_rotation) check_k(*final_rotation);
  }
};

inline constexpr double kMaxStatevectorDimension = 1e7;

/// Complex amplitudes over one (N_alpha, N_beta) sector.
///
/// Storage is row-major in (alpha string, beta string), both in ascending
/// numeric order, which matches the order of sector_basis().
struct SectorState {
  int n_orb = 0;
  int n_alpha = 0;
  int n_beta = 0;
  std::vector<SpinString> alpha_strings;
  std::vector<SpinString> beta_strings;
  std::vector<std::complex<double>> amplitudes;

  SectorState(int n, int na, int nb) : n_orb(n), n_alpha(na), n_beta(nb) {
    if (n < 1 || n > static_cast<int>(kMaxOrbitals) || na < 0 || nb < 0 || na > n || nb > n)
      throw ConfigError("sector state: invalid orbital or electron count");
    const double dim = static_cast<double>(binomial(n, na)) * static_cast<double>(binomial(n, nb));
    if (dim > kMaxStatevectorDimension)
      throw CapacityError("sector state: dimension " + std::to_string(dim) + " exceeds 1e7");
    alpha_strings = enumerate_strings(n, na);
    beta_strings = enumerate_strings(n, nb);
    amplitudes.assign(alpha_strings.size() * beta_strings.size(), {0.0, 0.0});
  }

  std::size_t dimension() const { return amplitudes.size(); }
  std::complex<double>& at(std::size_t ia, std::size_t ib) { return amplitudes[ia * beta_strings.size() + ib]; }
  const std::complex<double>& at(std::size_t ia, std::size_t ib) const {
    return amplitudes[ia * beta_strings.size() + ib];
  }
  Determinant determinant(std::size_t index) const {
    return {alpha_strings[index / beta_strings.size()], beta_strings[index % beta_strings.size()]};
  }
  std::vector<Determinant> basis() const {
    std::vector<Determinant> out;
    out.reserve(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) out.push_back(determinant(i));
    return out;
  }
  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return std::sqrt(s);
  }
};

namespace detail {

// Pairs (x, y) of string indices where y is x with orbital a moved to a + 1.
inline std::vector<std::pair<std::size_t, std::size_t>> hop_pairs(const std::vector<SpinString>& strings, int a) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const SpinString ma = SpinString{1} << a;
  const SpinString mb = SpinString{1} << (a + 1);
  for (std::size_t x = 0; x < strings.size(); ++x) {
    const SpinString s = strings[x];
    if ((s & ma) && !(s & mb)) out.emplace_back(x, string_rank((s & ~ma) | mb));
  }
  return out;
}

// Applies the orbital basis change with matrix U (orthogonal) to both spins.
inline void apply_orbital_rotation(SectorState& st, const Eigen::MatrixXd& U) {
  const auto g = givens_decompose(U);
  const std::size_t nb = st.beta_strings.size();
  const std::size_t na = st.alpha_strings.size();

  // Diagonal part first: U = R_1 ... R_m D acts as D, then R_m, ..., R_1.
  for (int p = 0; p < st.n_orb; ++p) {
    if (g.phases[static_cast<std::size_t>(p)] > 0) continue;
    const SpinString m = SpinString{1} << p;
    for (std::size_t ia = 0; ia < na; ++ia) {
      const bool fa = st.alpha_strings[ia] & m;
      for (std::size_t ib = 0; ib < nb; ++ib) {
        const bool fb = st.beta_strings[ib] & m;
        if (fa != fb) st.at(ia, ib) = -st.at(ia, ib);
      }
    }
  }

  for (auto it = g.rotations.rbegin(); it != g.rotations.rend(); ++it) {
    const auto& r = *it;
    const double det = r.m_aa * r.m_bb - r.m_ab * r.m_ba;
    const SpinString both = (SpinString{1} << r.a) | (SpinString{1} << (r.a + 1));

    // Alpha: mix rows.
    for (auto [x, y] : hop_pairs(st.alpha_strings, r.a)) {
      for (std::size_t ib = 0; ib < nb; ++ib) {
        const auto u = st.at(x, ib);
        const auto v = st.at(y, ib);
        st.at(x, ib) = r.m_aa * u + r.m_ab * v;
        st.at(y, ib) = r.m_ba * u + r.m_bb * v;
      }
    }
    if (det != 1.0)
      for (std::size_t ia = 0; ia < na; ++ia)
        if ((st.alpha_strings[ia] & both) == both)
          for (std::size_t ib = 0; ib < nb; ++ib) st.at(ia, ib) *= det;

    // Beta: mix columns.
    const auto beta_pairs = hop_pairs(st.beta_strings, r.a);
    for (std::size_t ia = 0; ia < na; ++ia) {
      for (auto [x, y] : beta_pairs) {
        const auto u = st.at(ia, x);
        const auto v = st.at(ia, y);
        st.at(ia, x) = r.m_aa * u + r.m_ab * v;
        st.at(ia, y) = r.m_ba * u + r.m_bb * v;
      }
    }
    if (det != 1.0)
      for (std::size_t ib = 0; ib < nb; ++ib)
        if ((st.beta_strings[ib] & both) == both)
          for (std::size_t ia = 0; ia < na; ++ia) st.at(ia, ib) *= det;
  }
}

// Multiplies each amplitude by exp(i x^T J x), x the spin-orbital occupation.
inline void apply_density_phase(SectorState& st, const Eigen::MatrixXd& J) {
  const int n = st.n_orb;
  const auto same_spin = [&](SpinString s, int offset) {
    double acc = 0.0;
    for (int p : set_bits(s))
      for (int q : set_bits(s)) acc += J(offset + p, offset + q);
    return acc;
  };
  std::vector<double> beta_phase(st.beta_strings.size());
  for (std::size_t ib = 0; ib < st.beta_strings.size(); ++ib) beta_phase[ib] = same_spin(st.beta_strings[ib], n);
  std::vector<double> cross(static_cast<std::size_t>(n));
  for (std::size_t ia = 0; ia < st.alpha_strings.size(); ++ia) {
    const SpinString sa = st.alpha_strings[ia];
    const double alpha_phase = same_spin(sa, 0);
    std::fill(cross.begin(), cross.end(), 0.0);
    for (int p : set_bits(sa))
      for (int q = 0; q < n; ++q) cross[static_cast<std::size_t>(q)] += J(p, n + q) + J(n + q, p);
    for (std::size_t ib = 0; ib < st.beta_strings.size(); ++ib) {
      double theta = alpha_phase + beta_phase[ib];
      for (int q : set_bits(st.beta_strings[ib])) theta += cross[static_cast<std::size_t>(q)];
      st.at(ia, ib) *= std::polar(1.0, theta);
    }
  }
}

}  // namespace detail

/// Exact ansatz state on the sector, starting from the lowest-orbital reference.
inline SectorState lucj_state(const LUCJParams& params, int n_orb, int n_alpha, int n_beta) {
  SectorState st(n_orb, n_alpha, n_beta);
  params.validate(n_orb);
  st.at(string_rank(lowest_orbitals(n_alpha)), string_rank(lowest_orbitals(n_beta))) = 1.0;
  for (const auto& layer : params.layers) {
    const Eigen::MatrixXd U = expm_antisymmetric(layer.K);
    detail::apply_orbital_rotation(st, U);
    detail::apply_density_phase(st, layer.J);
    if (layer.conjugated) detail::apply_orbital_rotation(st, U.transpose());
  }
  if (params.final_rotation) detail::apply_orbital_rotation(st, expm_antisymmetric(*params.final_rotation));
  return st;
}

/// Closed-shell coupled-cluster amplitudes, occupied orbitals first.
///
/// The doubles follow T2 = 1/2 sum t2(i,j,a,b) E_ai E_bj with spin-summed
/// excitation operators E_pq.
struct CCSDAmplitudes {
  int n_occ = 0;
  int n_virt = 0;
  Eigen::MatrixXd t1;           ///< n_occ x n_virt
  std::vector<double> t2_data;  ///< n_occ * n_occ * n_virt * n_virt, row-major (i, j, a, b)

  CCSDAmplitudes() = default;
  CCSDAmplitudes(int occ, int virt)
      : n_occ(occ),
        n_virt(virt),
        t1(Eigen::MatrixXd::Zero(occ, virt)),
        t2_data(static_cast<std::size_t>(occ * occ * virt * virt), 0.0) {}

  std::size_t index(int i, int j, int a, int b) const {
    return ((static_cast<std::size_t>(i) * n_occ + j) * n_virt + a) * n_virt + b;
  }
  double t2(int i, int j, int a, int b) const { return t2_data[index(i, j, a, b)]; }
  double& t2(int i, int j, int a, int b) { return t2_data[index(i, j, a, b)]; }
};

/// Conjugated layers from the leading eigenmodes of the doubles, t1 as the final rotation.
inline LUCJParams lucj_params_from_ccsd(const CCSDAmplitudes& amp, int n_layers) {
  const int no = amp.n_occ;
  const int nv = amp.n_virt;
  const int n = no + nv;
  if (no < 0 || nv < 0 || n < 1) throw ConfigError("CCSD amplitudes: invalid dimensions");
  if (amp.t1.rows() != no || amp.t1.cols() != nv) throw ConfigError("CCSD amplitudes: t1 shape mismatch");
  if (amp.t2_data.size() != static_cast<std::size_t>(no * no * nv * nv))
    throw ConfigError("CCSD amplitudes: t2 size mismatch");
  const int pairs = no * nv;
  if (n_layers < 0 || n_layers > pairs)
    throw ConfigError("lucj_params_from_ccsd: n_layers exceeds the rank bound n_occ * n_virt");

  Eigen::MatrixXd M(pairs, pairs);
  for (int i = 0; i < no; ++i)
    for (int a = 0; a < nv; ++a)
      for (int j = 0; j < no; ++j)
        for (int b = 0; b < nv; ++b) {
          const double v = amp.t2(i, j, a, b);
          if (std::abs(v - amp.t2(j, i, b, a)) > 1e-10)
            throw ConfigError("CCSD amplitudes: t2(i,j,a,b) != t2(j,i,b,a)");
          M(i * nv + a, j * nv + b) = v;
        }

  LUCJParams params;
  if (n_layers > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    std::vector<int> order(static_cast<std::size_t>(pairs));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]); });
    for (int m = 0; m < n_layers; ++m) {
      const int mode = order[static_cast<std::size_t>(m)];
      const double lambda = es.eigenvalues()[mode];
      const Eigen::VectorXd v = es.eigenvectors().col(mode);
      // S = sum v_ia (E_ai + E_ia) = R diag(d) R^T in the orbital basis.
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < no; ++i)
        for (int a = 0; a < nv; ++a) S(i, no + a) = S(no + a, i) = v(i * nv + a);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sd(S);
      Eigen::MatrixXd R = sd.eigenvectors();
      if (R.determinant() < 0) R.col(0) = -R.col(0);
      const Eigen::VectorXd& d = sd.eigenvalues();

      // exp(i lambda/2 S^2) = R e^{iJ} R^dagger with J over the rotated orbitals.
      LUCJLayer layer;
      layer.K = log_special_orthogonal(R.transpose());
      layer.J.resize(2 * n, 2 * n);
      for (int p = 0; p < 2 * n; ++p)
        for (int q = 0; q < 2 * n; ++q) layer.J(p, q) = 0.5 * lambda * d(p % n) * d(q % n);
      layer.conjugated = true;
      params.layers.push_back(std::move(layer));
    }
  }

  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < no; ++i)
    for (int a = 0; a < nv; ++a) {
      F(no + a, i) = amp.t1(i, a);
      F(i, no + a) = -amp.t1(i, a);
    }
  params.final_rotation = F;
  return params;
}

/// Closed-shell MP2 doubles from the diagonal Fock energies; t1 is zero.
///
/// A stand-in for coupled-cluster amplitudes when none are supplied.
inline CCSDAmplitudes mp2_amplitudes(const ActiveSpaceHamiltonian& H) {
  if (H.n_alpha() != H.n_beta()) throw ConfigError("MP2 amplitudes need a closed-shell reference");
  const int n = H.n_orb();
  const int no = H.n_alpha();
  const int nv = n - no;
  std::vector<double> fock(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    double f = H.h(p, p);
    for (int k = 0; k < no; ++k) f += 2.0 * H.eri(p, p, k, k) - H.eri(p, k, k, p);
    fock[static_cast<std::size_t>(p)] = f;
  }
  CCSDAmplitudes amp(no, nv);
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const double denom = fock[static_cast<std::size_t>(i)] + fock[static_cast<std::size_t>(j)] -
                               fock[static_cast<std::size_t>(no + a)] - fock[static_cast<std::size_t>(no + b)];
          if (std::abs(denom) < 1e-10) throw ConfigError("MP2 amplitudes: vanishing orbital-energy denominator");
          amp.t2(i, j, a, b) = H.eri(i, no + a, j, no + b) / denom;
        }
  return amp;
}

}  // namespace sqd
