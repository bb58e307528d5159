#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"

namespace sqd {

/// The Hamiltonian projected onto an explicit determinant basis.
///
/// Off-diagonal couplings are found by excitation generation plus a hash
/// lookup (pairwise evaluation for bases of at most `kPairwiseLimit`). When the
/// number of couplings fits in `nnz_budget` they are cached in CSR form;
/// otherwise every matvec regenerates them. Each output row is summed in
/// ascending column order, so results do not depend on the thread count.
class ProjectedHamiltonian {
 public:
  static constexpr std::size_t kPairwiseLimit = 1000;
  static constexpr std::size_t kDefaultNnzBudget = std::size_t{1} << 26;

  ProjectedHamiltonian(const ActiveSpaceHamiltonian& H, std::span<const Determinant> basis,
                       std::size_t nnz_budget = kDefaultNnzBudget)
      : H_(&H), basis_(basis.begin(), basis.end()) {
    const std::size_t dim = basis_.size();
    index_.reserve(dim * 2);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!index_.emplace(basis_[i], i).second) throw ConfigError("projected Hamiltonian: basis has duplicates");
    }
    diagonal_.resize(dim);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(dim); ++i)
      diagonal_[static_cast<std::size_t>(i)] = diagonal_element(H, basis_[static_cast<std::size_t>(i)]);

    // Build rows in chunks and give up on caching once the budget is exceeded.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(dim);
    std::size_t nnz = 0;
    cached_ = true;
    constexpr std::size_t kChunk = 4096;
    for (std::size_t start = 0; start < dim && cached_; start += kChunk) {
      const std::size_t stop = std::min(dim, start + kChunk);
#pragma omp parallel for schedule(dynamic, 16)
      for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(start); i < static_cast<std::ptrdiff_t>(stop); ++i)
        rows[static_cast<std::size_t>(i)] = row(static_cast<std::size_t>(i));
      for (std::size_t i = start; i < stop; ++i) nnz += rows[i].size();
      if (nnz > nnz_budget) cached_ = false;
    }
    if (!cached_) return;
    row_ptr_.assign(dim + 1, 0);
    for (std::size_t i = 0; i < dim; ++i) row_ptr_[i + 1] = row_ptr_[i] + rows[i].size();
    cols_.reserve(nnz);
    vals_.reserve(nnz);
    for (auto& r : rows) {
      for (auto [c, v] : r) {
        cols_.push_back(c);
        vals_.push_back(v);
      }
      std::vector<std::pair<std::uint32_t, double>>().swap(r);
    }
  }

  [[nodiscard]] std::size_t dimension() const { return basis_.size(); }
  [[nodiscard]] std::span<const double> diagonal() const { return diagonal_; }
  [[nodiscard]] std::span<const Determinant> basis() const { return basis_; }
  [[nodiscard]] bool cached() const { return cached_; }
  [[nodiscard]] std::size_t nonzeros() const { return vals_.size(); }

  /// y = H x.
  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t dim = basis_.size();
    if (x.size() != dim || y.size() != dim) throw ConfigError("apply_hamiltonian: dimension mismatch");
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(dim); ++si) {
      const auto i = static_cast<std::size_t>(si);
      double acc = diagonal_[i] * x[i];
      if (cached_) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += vals_[k] * x[cols_[k]];
      } else {
        for (auto [c, v] : row(i)) acc += v * x[c];
      }
      y[i] = acc;
    }
  }

  /// Dense copy, for small bases and tests.
  [[nodiscard]] std::vector<double> dense() const {
    const std::size_t dim = basis_.size();
    std::vector<double> m(dim * dim, 0.0);
    std::vector<double> e(dim, 0.0);
    std::vector<double> col(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
      e[j] = 1.0;
      apply(e, col);
      for (std::size_t i = 0; i < dim; ++i) m[i * dim + j] = col[i];
      e[j] = 0.0;
    }
    return m;
  }

 private:
  // Off-diagonal nonzeros of row i, sorted by column.
  [[nodiscard]] std::vector<std::pair<std::uint32_t, double>> row(std::size_t i) const {
    std::vector<std::pair<std::uint32_t, double>> out;
    const Determinant& d = basis_[i];
    if (basis_.size() <= kPairwiseLimit) {
      for (std::size_t j = 0; j < basis_.size(); ++j) {
        if (j == i) continue;
        const double v = matrix_element(*H_, d, basis_[j]);
        if (v != 0.0) out.emplace_back(static_cast<std::uint32_t>(j), v);
      }
      return out;
    }
    for_each_excitation(*H_, d, [&](const Determinant& e, double v) {
      if (v == 0.0) return;
      auto it = index_.find(e);
      if (it != index_.end()) out.emplace_back(static_cast<std::uint32_t>(it->second), v);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  const ActiveSpaceHamiltonian* H_;
  std::vector<Determinant> basis_;
  std::unordered_map<Determinant, std::size_t, DeterminantHash> index_;
  std::vector<double> diagonal_;
  bool cached_ = false;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
};

/// (Hv)_i = sum_j <basis_i|H|basis_j> v_j.
inline std::vector<double> apply_hamiltonian(const ActiveSpaceHamiltonian& H, std::span<const Determinant> basis,
                                             std::span<const double> v) {
  if (v.size() != basis.size()) throw ConfigError("apply_hamiltonian: dimension mismatch");
  ProjectedHamiltonian P(H, basis);
  std::vector<double> out(v.size());
  P.apply(v, out);
  return out;
}

}  // namespace sqd
