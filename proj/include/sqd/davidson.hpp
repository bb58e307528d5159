#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "sqd/errors.hpp"
#include "sqd/rng.hpp"

namespace sqd {

struct DavidsonOptions {
  int n_roots = 1;
  double residual_tol = 1e-8;
  int max_iterations = 300;
  /// 0 selects max(20, 4 * n_roots).
  int max_subspace = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] int effective_max_subspace() const {
    return max_subspace > 0 ? max_subspace : std::max(20, 4 * n_roots);
  }

  void validate() const {
    if (n_roots < 1) throw ConfigError("Davidson: n_roots must be >= 1");
    if (!(residual_tol > 0.0)) throw ConfigError("Davidson: residual_tol must be > 0");
    if (max_iterations < 1) throw ConfigError("Davidson: max_iterations must be >= 1");
    if (effective_max_subspace() < 2 * n_roots) throw ConfigError("Davidson: max_subspace must be >= 2 * n_roots");
  }
};

struct SpectrumResult {
  std::vector<double> energies;              ///< ascending
  std::vector<std::vector<double>> vectors;  ///< unit norm, one per energy
  std::vector<double> residual_norms;        ///< ||A v - e v||, recomputed after the solve
  int iterations_used = 0;
  bool converged = false;
};

namespace detail {

// Flip sign so the largest-magnitude component is positive.
inline void canonicalize_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (!v.empty() && v[best] < 0)
    for (auto& x : v) x = -x;
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace detail

/// Denominators of the diagonal preconditioner are never smaller than this.
inline constexpr double kPreconditionerFloor = 1e-8;

/// Lowest eigenpairs of a symmetric operator by the Davidson method.
///
/// `op(x, y)` must write y = A x for spans of length diag.size(). The initial
/// guesses are unit vectors on the lowest diagonal entries (ties by index)
/// plus a small seeded perturbation, which keeps the search from being stuck
/// in a symmetry block that excludes the true ground state. The subspace is
/// thick-restarted on the current Ritz vectors when it reaches max_subspace.
/// If max_iterations is exhausted the best Ritz pairs are returned with
/// converged == false.
template <class Op>
SpectrumResult davidson_lowest(Op&& op, std::span<const double> diag, const DavidsonOptions& opts) {
  opts.validate();
  const auto dim = static_cast<Eigen::Index>(diag.size());
  const int k = opts.n_roots;
  if (dim < k) throw ConfigError("Davidson: dimension smaller than n_roots");
  const Eigen::Index max_sub = std::min<Eigen::Index>(opts.effective_max_subspace(), dim);

  auto matvec = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(dim);
    op(std::span<const double>(x.data(), static_cast<std::size_t>(dim)),
       std::span<double>(y.data(), static_cast<std::size_t>(dim)));
  };

  Eigen::MatrixXd V(dim, max_sub);
  Eigen::MatrixXd AV(dim, max_sub);
  Eigen::Index m = 0;

  // Adds t to the basis after two rounds of Gram-Schmidt; false if t is
  // (numerically) already in span(V).
  auto add_vector = [&](Eigen::VectorXd t) {
    const double norm0 = t.norm();
    if (!(norm0 > 0.0)) return false;
    for (int pass = 0; pass < 2; ++pass) {
      if (m > 0) t -= V.leftCols(m) * (V.leftCols(m).transpose() * t);
    }
    const double norm = t.norm();
    if (!(norm > 1e-10 * norm0) || norm < 1e-14) return false;
    V.col(m) = t / norm;
    Eigen::VectorXd y;
    matvec(V.col(m), y);
    AV.col(m) = y;
    ++m;
    return true;
  };

  {
    std::vector<std::size_t> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });
    CounterRng rng(opts.seed, stream_id(StreamPurpose::kEigensolverGuess));
    std::size_t next = 0;
    while (m < k && next < order.size()) {
      Eigen::VectorXd g(dim);
      for (Eigen::Index i = 0; i < dim; ++i) g[i] = 1e-4 * (2.0 * rng.uniform() - 1.0);
      g[static_cast<Eigen::Index>(order[next++])] += 1.0;
      add_vector(std::move(g));
    }
    if (m < k) throw ConvergenceError("Davidson: could not build an initial subspace");
  }

  SpectrumResult result;
  Eigen::VectorXd theta;
  Eigen::MatrixXd X;
  Eigen::MatrixXd AX;
  Eigen::VectorXd res_norms(k);
  int iter = 0;
  bool converged = false;
  while (true) {
    ++iter;
    Eigen::MatrixXd T = V.leftCols(m).transpose() * AV.leftCols(m);
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);
    theta = small.eigenvalues().head(k);
    const Eigen::MatrixXd S = small.eigenvectors().leftCols(k);
    X = V.leftCols(m) * S;
    AX = AV.leftCols(m) * S;
    Eigen::MatrixXd R = AX - X * theta.asDiagonal();
    for (int j = 0; j < k; ++j) res_norms[j] = R.col(j).norm();
    converged = (res_norms.array() < opts.residual_tol).all();
    if (converged || iter >= opts.max_iterations || m == dim) break;

    // Thick restart once the subspace is full.
    if (m >= max_sub) {
      // Re-orthonormalize the Ritz block; it is orthonormal up to roundoff.
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
      Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
      V.leftCols(k) = Q;
      m = k;
      for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd y;
        matvec(V.col(j), y);
        AV.col(j) = y;
      }
      continue;
    }

    bool added = false;
    for (int j = 0; j < k; ++j) {
      if (res_norms[j] < opts.residual_tol || m >= max_sub) continue;
      Eigen::VectorXd t(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        double denom = diag[static_cast<std::size_t>(i)] - theta[j];
        if (std::abs(denom) < kPreconditionerFloor) denom = denom < 0 ? -kPreconditionerFloor : kPreconditionerFloor;
        t[i] = R(i, j) / denom;
      }
      if (!t.allFinite()) t = R.col(j);
      if (add_vector(t)) {
        added = true;
      } else if (m < max_sub && add_vector(R.col(j))) {
        added = true;
      }
    }
    if (!added) break;
  }

  if (!detail::all_finite(X) || !theta.allFinite()) throw ConvergenceError("Davidson: non-finite Ritz pairs");

  // Post hoc residuals, independent of the iteration bookkeeping.
  result.iterations_used = iter;
  result.converged = true;
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd x = X.col(j);
    x /= x.norm();
    detail::canonicalize_sign(std::span<double>(x.data(), static_cast<std::size_t>(dim)));
    Eigen::VectorXd ax;
    matvec(x, ax);
    const double e = x.dot(ax);
    const double r = (ax - e * x).norm();
    result.energies.push_back(e);
    result.vectors.emplace_back(x.data(), x.data() + dim);
    result.residual_norms.push_back(r);
    if (!(r < opts.residual_tol)) result.converged = false;
  }
  return result;
}

/// Lowest `wanted` eigenpairs (default: all) of a dense symmetric row-major matrix.
inline SpectrumResult dense_eigensolve(std::span<const double> matrix, std::size_t dim,
                                       std::size_t wanted = std::numeric_limits<std::size_t>::max()) {
  if (dim > 4096) throw CapacityError("dense_eigensolve: dimension exceeds 4096");
  if (matrix.size() != dim * dim) throw ConfigError("dense_eigensolve: matrix size does not match dimension");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
      matrix.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  if (dim > 0 && (A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ConfigError("dense_eigensolve: matrix is not symmetric");
  const Eigen::MatrixXd dense_a = A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_a);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense_eigensolve: decomposition failed");
  SpectrumResult r;
  r.converged = true;
  r.iterations_used = 1;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(std::min(dim, wanted)); ++j) {
    Eigen::VectorXd v = es.eigenvectors().col(j);
    detail::canonicalize_sign(std::span<double>(v.data(), dim));
    r.energies.push_back(es.eigenvalues()[j]);
    r.vectors.emplace_back(v.data(), v.data() + dim);
    r.residual_norms.push_back((A * v - es.eigenvalues()[j] * v).norm());
  }
  return r;
}

}  // namespace sqd
