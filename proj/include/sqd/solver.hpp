#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sqd/davidson.hpp"
#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"
#include "sqd/projected_hamiltonian.hpp"

namespace sqd {

/// Ground state of the Hamiltonian restricted to an explicit determinant basis.
struct SubspaceResult {
  double energy = 0.0;
  std::vector<Determinant> basis;
  std::vector<double> coefficients;
  std::size_t dimension = 0;
  int iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

/// Bases smaller than this are diagonalized densely.
inline constexpr std::size_t kDenseFallbackDimension = 200;

/// Largest complete sector fci_ground_state accepts.
inline constexpr std::uint64_t kMaxFciDimension = 10'000'000;

/// Lowest eigenpair of H projected onto `basis` (which must be duplicate-free).
inline SubspaceResult solve_subspace(const ActiveSpaceHamiltonian& H, std::vector<Determinant> basis,
                                     const DavidsonOptions& opts = {}) {
  if (basis.empty()) throw ConfigError("solve_subspace: empty basis");
  ProjectedHamiltonian P(H, basis);
  SpectrumResult spectrum;
  if (basis.size() < kDenseFallbackDimension) {
    spectrum = dense_eigensolve(P.dense(), basis.size(), 1);
  } else {
    spectrum = davidson_lowest([&](std::span<const double> x, std::span<double> y) { P.apply(x, y); }, P.diagonal(),
                           opts);
  }
  SubspaceResult r;
  r.energy = spectrum.energies.front();
  r.coefficients = std::move(spectrum.vectors.front());
  r.dimension = basis.size();
  r.basis = std::move(basis);
  r.iterations = spectrum.iterations_used;
  r.converged = spectrum.converged;
  r.residual_norm = spectrum.residual_norms.front();
  return r;
}

/// Ground state over the complete (n_alpha, n_beta) determinant sector.
inline SubspaceResult fci_ground_state(const ActiveSpaceHamiltonian& H, const DavidsonOptions& opts = {}) {
  const std::uint64_t na = binomial(H.n_orb(), H.n_alpha());
  const std::uint64_t nb = binomial(H.n_orb(), H.n_beta());
  if (na > kMaxFciDimension || nb > kMaxFciDimension || na * nb > kMaxFciDimension)
    throw CapacityError("FCI sector dimension exceeds " + std::to_string(kMaxFciDimension));
  return solve_subspace(H, sector_basis(H.n_orb(), H.n_alpha(), H.n_beta()), opts);
}

}  // namespace sqd
