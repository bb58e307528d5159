#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <vector>

#include "sqd/counts.hpp"
#include "sqd/errors.hpp"
#include "sqd/hamiltonian.hpp"
#include "sqd/rng.hpp"
#include "sqd/solver.hpp"
#include "sqd/subspace.hpp"

namespace sqd {

struct RecoveryConfig {
  int iterations = 10;
  int batches = 16;
  std::uint64_t samples_per_batch = 1000;
  std::uint64_t seed = 0;
  bool closure = true;
  std::uint64_t max_dimension = 50'000'000;

  void validate() const {
    if (iterations < 1) throw ConfigError("recovery: iterations must be >= 1");
    if (batches < 1) throw ConfigError("recovery: batches must be >= 1");
    if (samples_per_batch < 1) throw ConfigError("recovery: samples_per_batch must be >= 1");
    if (max_dimension < 1) throw ConfigError("recovery: max_dimension must be >= 1");
  }
};

/// Ground state of one batch subspace.
struct BatchState {
  std::vector<Determinant> basis;
  std::vector<double> coefficients;
  double energy = 0.0;
  std::uint64_t shots = 0;           ///< shots behind the sampled configurations
  std::size_t sampled_configurations = 0;
  bool converged = true;
};

struct SQDResult {
  double energy = 0.0;
  std::vector<double> energy_history;
  std::vector<double> occupations;  ///< 2 n_orb spin-orbital occupations of the winning state
  std::vector<Determinant> basis;
  std::vector<double> coefficients;
  std::size_t dimension = 0;
  std::size_t sampled_dimension = 0;  ///< distinct sampled configurations behind the winning basis
  int iterations = 0;
  bool converged = true;
  std::vector<BatchState> batches;  ///< every batch of the final iteration
};

/// Mean occupation of each spin orbital in a CI vector.
inline std::vector<double> state_occupations(const std::vector<Determinant>& basis, std::span<const double> coefficients,
                                             int n_orb) {
  std::vector<double> occ(static_cast<std::size_t>(2 * n_orb), 0.0);
  double norm = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double w = coefficients[i] * coefficients[i];
    norm += w;
    for (int p : set_bits(basis[i].alpha)) occ[static_cast<std::size_t>(p)] += w;
    for (int p : set_bits(basis[i].beta)) occ[static_cast<std::size_t>(n_orb + p)] += w;
  }
  for (auto& x : occ) x = std::clamp(x / norm, 0.0, 1.0);
  return occ;
}

/// Up to k distinct configurations drawn without replacement, weight = shot count.
inline BitstringCounts draw_batch(const BitstringCounts& pool, std::uint64_t k, CounterRng& rng) {
  if (pool.size() <= k) return pool;
  std::vector<std::pair<double, const std::pair<const Determinant, std::uint64_t>*>> keyed;
  keyed.reserve(pool.size());
  for (const auto& entry : pool.entries()) {
    const double u = 1.0 - rng.uniform();  // (0, 1]
    keyed.emplace_back(std::log(u) / static_cast<double>(entry.second), &entry);
  }
  std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  BitstringCounts batch(pool.n_orb());
  for (std::size_t i = 0; i < k; ++i) batch.add(keyed[i].second->first, keyed[i].second->second);
  return batch;
}

namespace detail {

template <class Body>
void parallel_batches(int count, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < count; ++b) {
    try {
      body(b);
    } catch (...) {
      errors[static_cast<std::size_t>(b)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline DavidsonOptions batch_solver_options(std::uint64_t seed, std::uint64_t iteration, std::uint64_t batch) {
  DavidsonOptions opts;
  opts.seed = seed ^ stream_id(StreamPurpose::kEigensolverGuess, iteration, batch);
  return opts;
}

inline std::size_t lowest_batch(const std::vector<BatchState>& states) {
  std::size_t best = 0;
  for (std::size_t b = 1; b < states.size(); ++b)
    if (states[b].energy < states[best].energy) best = b;
  return best;
}

inline void adopt_winner(SQDResult& r, const ActiveSpaceHamiltonian& H) {
  const auto& w = r.batches[detail::lowest_batch(r.batches)];
  r.energy = w.energy;
  r.basis = w.basis;
  r.coefficients = w.coefficients;
  r.dimension = w.basis.size();
  r.sampled_dimension = w.sampled_configurations;
  r.occupations = state_occupations(w.basis, w.coefficients, H.n_orb());
}

}  // namespace detail

/// Self-consistent configuration recovery and batched subspace diagonalization.
inline SQDResult sqd_ground_state(const ActiveSpaceHamiltonian& H, const BitstringCounts& counts,
                                  const RecoveryConfig& cfg = {}) {
  cfg.validate();
  if (counts.n_orb() != H.n_orb()) throw ConfigError("sqd: counts and Hamiltonian disagree on orbital count");
  if (counts.empty()) throw EmptySampleError("sqd: no samples");
  auto [valid, invalid] = partition_by_hamming(counts, H.n_alpha(), H.n_beta());
  if (valid.empty())
    throw EmptySampleError("sqd: unable to obtain configurations with correct Hamming weights");

  std::vector<double> reference = empirical_occupations(valid);
  SQDResult result;
  for (int it = 0; it < cfg.iterations; ++it) {
    BitstringCounts pool = valid;
    if (it > 0 && !invalid.empty()) {
      const auto recovered = recover_configurations(invalid, reference, H.n_alpha(), H.n_beta(), cfg.seed,
                                                    static_cast<std::uint64_t>(it));
      for (const auto& [d, c] : recovered.entries()) pool.add(d, c);
    }

    std::vector<BatchState> states(static_cast<std::size_t>(cfg.batches));
    detail::parallel_batches(cfg.batches, [&](int b) {
      CounterRng rng(cfg.seed, stream_id(StreamPurpose::kBatchDraw, static_cast<std::uint64_t>(it),
                                         static_cast<std::uint64_t>(b)));
      const auto batch = draw_batch(pool, cfg.samples_per_batch, rng);
      auto solved = solve_subspace(H, build_subspace(batch, cfg.closure, cfg.max_dimension),
                                   detail::batch_solver_options(cfg.seed, static_cast<std::uint64_t>(it),
                                                                static_cast<std::uint64_t>(b)));
      auto& s = states[static_cast<std::size_t>(b)];
      s.basis = std::move(solved.basis);
      s.coefficients = std::move(solved.coefficients);
      s.energy = solved.energy;
      s.shots = batch.total_shots();
      s.sampled_configurations = batch.size();
      s.converged = solved.converged;
    });

    // Shot-weighted average over batches feeds the next recovery step.
    std::vector<double> averaged(reference.size(), 0.0);
    double weight = 0.0;
    for (const auto& s : states) {
      const auto occ = state_occupations(s.basis, s.coefficients, H.n_orb());
      for (std::size_t p = 0; p < occ.size(); ++p) averaged[p] += static_cast<double>(s.shots) * occ[p];
      weight += static_cast<double>(s.shots);
    }
    for (auto& x : averaged) x = std::clamp(x / weight, 0.0, 1.0);
    reference = std::move(averaged);

    result.batches = std::move(states);
    result.energy_history.push_back(result.batches[detail::lowest_batch(result.batches)].energy);
    result.converged = std::all_of(result.batches.begin(), result.batches.end(),
                                   [](const BatchState& s) { return s.converged; });
  }
  result.iterations = cfg.iterations;
  detail::adopt_winner(result, H);
  return result;
}

/// Extends each final-iteration batch state by excitations and re-diagonalizes.
///
/// Each extended basis contains the batch's own basis, so the result never
/// lies above the prior energy.
inline SQDResult ext_sqd(const ActiveSpaceHamiltonian& H, const SQDResult& prior,
                         const ExtensionThresholds& thresholds = {}, int batches = 16,
                         std::uint64_t max_dimension = 50'000'000) {
  thresholds.validate();
  if (batches < 1) throw ConfigError("ext_sqd: batches must be >= 1");
  if (prior.batches.empty()) throw ConfigError("ext_sqd: prior result carries no batch states");
  const int count = std::min(batches, static_cast<int>(prior.batches.size()));

  SQDResult result;
  result.batches.resize(static_cast<std::size_t>(count));
  detail::parallel_batches(count, [&](int b) {
    const auto& src = prior.batches[static_cast<std::size_t>(b)];
    auto extended = extend_subspace(src.coefficients, src.basis, H.n_orb(), thresholds, max_dimension);
    std::vector<Determinant> own = src.basis;
    std::sort(own.begin(), own.end());
    std::vector<Determinant> merged;
    merged.reserve(extended.size() + own.size());
    std::set_union(extended.begin(), extended.end(), own.begin(), own.end(), std::back_inserter(merged));
    if (merged.size() > max_dimension) throw CapacityError("ext_sqd: extended basis exceeds dimension cap");
    auto solved = solve_subspace(H, std::move(merged),
                                 detail::batch_solver_options(0, 0xFFFF, static_cast<std::uint64_t>(b)));
    auto& s = result.batches[static_cast<std::size_t>(b)];
    s.basis = std::move(solved.basis);
    s.coefficients = std::move(solved.coefficients);
    s.energy = solved.energy;
    s.shots = src.shots;
    s.sampled_configurations = src.sampled_configurations;
    s.converged = solved.converged;
  });
  result.iterations = 1;
  result.converged = std::all_of(result.batches.begin(), result.batches.end(),
                                 [](const BatchState& s) { return s.converged; });
  detail::adopt_winner(result, H);
  result.energy_history = {result.energy};
  return result;
}

}  // namespace sqd
