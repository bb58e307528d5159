#pragma once

#include <algorithm>
#include <charconv>
#include <complex>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sqd/determinant.hpp"
#include "sqd/errors.hpp"
#include "sqd/lucj.hpp"
#include "sqd/rng.hpp"

namespace sqd {

/// Measured configurations with multiplicities over 2 * n_orb qubits.
class BitstringCounts {
 public:
  explicit BitstringCounts(int n_orb = 0) : n_orb_(n_orb) {
    if (n_orb < 0 || n_orb > kMaxOrbitals) throw ConfigError("counts: orbital count out of range");
  }

  int n_orb() const { return n_orb_; }
  int n_qubits() const { return 2 * n_orb_; }
  std::uint64_t total_shots() const { return total_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<Determinant, std::uint64_t>& entries() const { return entries_; }

  void add(const Determinant& d, std::uint64_t count) {
    if (count == 0) return;
    if ((d.alpha & ~low_mask(n_orb_)) || (d.beta & ~low_mask(n_orb_)))
      throw ConfigError("counts: configuration uses orbitals beyond n_orb");
    entries_[d] += count;
    total_ += count;
  }

  std::uint64_t count(const Determinant& d) const {
    auto it = entries_.find(d);
    return it == entries_.end() ? 0 : it->second;
  }

  friend bool operator==(const BitstringCounts&, const BitstringCounts&) = default;

 private:
  int n_orb_;
  std::map<Determinant, std::uint64_t> entries_;
  std::uint64_t total_ = 0;
};

inline BitstringCounts read_counts(std::istream& in) {
  std::string line;
  int line_no = 0;
  int n_qubits = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto start = line.find_first_not_of(" \t");
    const auto end = line.find_last_not_of(" \t\r");
    const std::string header = line.substr(start, end - start + 1);
    if (header.rfind("n_qubits=", 0) != 0) throw ParseError("counts: missing n_qubits=<int> header");
    const char* first = header.data() + 9;
    const char* last = header.data() + header.size();
    auto [ptr, ec] = std::from_chars(first, last, n_qubits);
    if (ec != std::errc() || ptr != last || n_qubits < 0) throw ParseError("counts: malformed header '" + header + "'");
    if (n_qubits % 2 != 0) throw ParseError("counts: n_qubits must be even");
    if (n_qubits > 2 * kMaxOrbitals) throw ParseError("counts: n_qubits exceeds 128");
    break;
  }
  if (n_qubits < 0) throw ParseError("counts: missing n_qubits=<int> header");

  BitstringCounts counts(n_qubits / 2);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string bits, count_text, extra;
    if (!(fields >> bits)) continue;
    const std::string where = "counts line " + std::to_string(line_no) + ": ";
    if (!(fields >> count_text) || (fields >> extra)) throw ParseError(where + "expected '<bitstring> <count>'");
    if (static_cast<int>(bits.size()) != n_qubits)
      throw ParseError(where + "bitstring length " + std::to_string(bits.size()) + " does not match n_qubits=" +
                       std::to_string(n_qubits));
    if (count_text.front() == '-') throw ParseError(where + "negative count");
    std::uint64_t c = 0;
    auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), c);
    if (ec != std::errc() || ptr != count_text.data() + count_text.size())
      throw ParseError(where + "malformed count '" + count_text + "'");
    Determinant d;
    try {
      d = from_bitstring(bits);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    counts.add(d, c);
  }
  return counts;
}

inline BitstringCounts read_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("counts: cannot open '" + path + "'");
  return read_counts(in);
}

inline void write_counts(const BitstringCounts& counts, std::ostream& out) {
  out << "n_qubits=" << counts.n_qubits() << '\n';
  for (const auto& [d, c] : counts.entries()) out << to_bitstring(d, counts.n_orb()) << ' ' << c << '\n';
}

inline void write_counts(const BitstringCounts& counts, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("counts: cannot write '" + path + "'");
  write_counts(counts, out);
}

inline constexpr std::uint64_t kShotBlock = 1 << 16;

/// Multinomial shots from explicit probabilities over a determinant list.
///
/// Shots are drawn in fixed blocks, each with its own generator stream, so
/// the result does not depend on the thread count.
inline BitstringCounts sample_from_probabilities(int n_orb, const std::vector<Determinant>& basis,
                                                 std::span<const double> probabilities, std::uint64_t shots,
                                                 std::uint64_t seed) {
  if (shots == 0) throw ConfigError("sampling: shot count must be positive");
  if (basis.size() != probabilities.size()) throw ConfigError("sampling: basis/probability size mismatch");
  std::vector<double> cdf(probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] >= 0.0)) throw ConfigError("sampling: negative or NaN probability");
    acc += probabilities[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw ConfigError("sampling: distribution has zero weight");
  std::size_t last_nonzero = probabilities.size() - 1;
  while (probabilities[last_nonzero] == 0.0) --last_nonzero;

  const std::uint64_t n_blocks = (shots + kShotBlock - 1) / kShotBlock;
  std::vector<std::vector<std::uint32_t>> block_hits(n_blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kShotBlock;
    const std::uint64_t len = std::min(kShotBlock, shots - begin);
    CounterRng rng(seed, stream_id(StreamPurpose::kShotSampling, 0, static_cast<std::uint64_t>(b)));
    auto& hits = block_hits[static_cast<std::size_t>(b)];
    hits.reserve(len);
    for (std::uint64_t s = 0; s < len; ++s) {
      const double u = rng.uniform() * acc;
      auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (idx > last_nonzero) idx = last_nonzero;
      hits.push_back(static_cast<std::uint32_t>(idx));
    }
  }
  std::vector<std::uint64_t> tally(basis.size(), 0);
  for (const auto& hits : block_hits)
    for (auto i : hits) ++tally[i];
  BitstringCounts counts(n_orb);
  for (std::size_t i = 0; i < basis.size(); ++i) counts.add(basis[i], tally[i]);
  return counts;
}

/// Shots from |amplitude|^2 of a sector state.
inline BitstringCounts sample_counts(const SectorState& state, std::uint64_t shots, std::uint64_t seed) {
  std::vector<double> p(state.dimension());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(state.amplitudes[i]);
  return sample_from_probabilities(state.n_orb, state.basis(), p, shots, seed);
}

/// Shots from c^2 of a real CI vector over an explicit basis.
inline BitstringCounts sample_counts(int n_orb, const std::vector<Determinant>& basis,
                                     std::span<const double> coefficients, std::uint64_t shots, std::uint64_t seed) {
  std::vector<double> p(coefficients.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = coefficients[i] * coefficients[i];
  return sample_from_probabilities(n_orb, basis, p, shots, seed);
}

struct NoiseModel {
  double flip_probability = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
      throw ConfigError("noise: flip probability must lie in [0, 1]");
  }
};

/// Independent per-bit flips on every shot, re-aggregated.
inline BitstringCounts apply_readout_noise(const BitstringCounts& counts, const NoiseModel& noise) {
  noise.validate();
  if (noise.flip_probability == 0.0) return counts;
  const int n = counts.n_orb();
  const SpinString full = low_mask(n);
  if (noise.flip_probability == 1.0) {
    BitstringCounts out(n);
    for (const auto& [d, c] : counts.entries()) out.add({~d.alpha & full, ~d.beta & full}, c);
    return out;
  }

  std::vector<std::pair<Determinant, std::uint64_t>> items(counts.entries().begin(), counts.entries().end());
  std::vector<std::uint64_t> prefix(items.size() + 1, 0);
  for (std::size_t i = 0; i < items.size(); ++i) prefix[i + 1] = prefix[i] + items[i].second;
  const std::uint64_t total = prefix.back();
  const std::uint64_t n_blocks = (total + kShotBlock - 1) / kShotBlock;
  const double p = noise.flip_probability;

  std::vector<std::map<Determinant, std::uint64_t>> partial(n_blocks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kShotBlock;
    const std::uint64_t end = std::min(total, begin + kShotBlock);
    CounterRng rng(noise.seed, stream_id(StreamPurpose::kReadoutNoise, 0, static_cast<std::uint64_t>(b)));
    auto& local = partial[static_cast<std::size_t>(b)];
    auto item = static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), begin) - prefix.begin()) - 1;
    for (std::uint64_t shot = begin; shot < end; ++shot) {
      while (shot >= prefix[item + 1]) ++item;
      Determinant d = items[item].first;
      for (int q = 0; q < n; ++q)
        if (rng.uniform() < p) d.alpha ^= SpinString{1} << q;
      for (int q = 0; q < n; ++q)
        if (rng.uniform() < p) d.beta ^= SpinString{1} << q;
      ++local[d];
    }
  }
  BitstringCounts out(n);
  for (const auto& local : partial)
    for (const auto& [d, c] : local) out.add(d, c);
  return out;
}

}  // namespace sqd
