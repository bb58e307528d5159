#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sqd/counts.hpp"

using namespace sqd;

namespace {

BitstringCounts parse(const std::string& text) {
  std::istringstream in(text);
  return read_counts(in);
}

// Probability that a string with k of n bits set keeps weight k under independent flips.
double weight_preserved(int n, int k, double p) {
  double acc = 0.0;
  for (int j = 0; j <= std::min(k, n - k); ++j)
    acc += static_cast<double>(binomial(k, j)) * static_cast<double>(binomial(n - k, j)) * std::pow(p, 2 * j) *
           std::pow(1.0 - p, n - 2 * j);
  return acc;
}

// Distribution of the output weight for an input of weight k, by convolving two binomials.
std::vector<double> weight_distribution(int n, int k, double p) {
  std::vector<double> out(static_cast<std::size_t>(n + 1), 0.0);
  for (int lost = 0; lost <= k; ++lost)
    for (int gained = 0; gained <= n - k; ++gained)
      out[static_cast<std::size_t>(k - lost + gained)] +=
          static_cast<double>(binomial(k, lost)) * std::pow(p, lost) * std::pow(1 - p, k - lost) *
          static_cast<double>(binomial(n - k, gained)) * std::pow(p, gained) * std::pow(1 - p, n - k - gained);
  return out;
}

SectorState random_state(int n, int na, int nb, std::uint64_t seed) {
  SectorState st(n, na, nb);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  double norm = 0.0;
  for (auto& a : st.amplitudes) {
    a = {g(gen), g(gen)};
    norm += std::norm(a);
  }
  for (auto& a : st.amplitudes) a /= std::sqrt(norm);
  return st;
}

}  // namespace

TEST(CountsFile, ParsesExample) {
  const auto c = parse("n_qubits=4\n0011 10\n1100 5\n");
  EXPECT_EQ(c.n_qubits(), 4);
  EXPECT_EQ(c.size(), 2U);
  EXPECT_EQ(c.total_shots(), 15U);
  EXPECT_EQ(c.count(from_bitstring("0011")), 10U);
  EXPECT_EQ(c.count(from_bitstring("1100")), 5U);
}

TEST(CountsFile, RoundTrip) {
  BitstringCounts c(3);
  c.add({0b011, 0b101}, 7);
  c.add({0b110, 0b001}, 123456789012ULL);
  c.add({0b000, 0b111}, 1);
  std::ostringstream out;
  write_counts(c, out);
  EXPECT_EQ(parse(out.str()), c);
}

TEST(CountsFile, Errors) {
  EXPECT_THROW(parse("n_qubits=4\n01 3\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=4\n0101 -3\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=4\n0101\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=4\n0101 3 9\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=4\n0121 3\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=4\n0101 x\n"), ParseError);
  EXPECT_THROW(parse("0101 3\n"), ParseError);
  EXPECT_THROW(parse("n_qubits=3\n"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(read_counts(std::string("/nonexistent/counts.txt")), ParseError);
}

TEST(Sampling, ReferenceStateGivesOnlyReference) {
  SectorState st(4, 2, 1);
  st.at(string_rank(0b0011), string_rank(0b0001)) = 1.0;
  const auto c = sample_counts(st, 10000, 1);
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c.count(hartree_fock(2, 1)), 10000U);
}

TEST(Sampling, UniformPairFrequenciesWithinBinomialBound) {
  SectorState st(3, 1, 1);
  const std::complex<double> amp(1.0 / std::sqrt(2.0), 0.0);
  st.amplitudes[0] = amp;
  st.amplitudes[4] = std::complex<double>(0.0, 1.0) * amp;
  const auto c = sample_counts(st, 100000, 0);
  ASSERT_EQ(c.size(), 2U);
  for (std::size_t i : {0U, 4U}) {
    const double f = static_cast<double>(c.count(st.determinant(i))) / 1e5;
    EXPECT_GE(f, 0.494);
    EXPECT_LE(f, 0.506);
  }
}

TEST(Sampling, DeterministicPerSeedAndNumberConserving) {
  const auto st = random_state(5, 2, 3, 4);
  const auto a = sample_counts(st, 200000, 42);
  const auto b = sample_counts(st, 200000, 42);
  const auto c = sample_counts(st, 200000, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.total_shots(), 200000U);
  for (const auto& [d, n] : a.entries()) {
    EXPECT_EQ(d.n_alpha(), 2);
    EXPECT_EQ(d.n_beta(), 3);
  }
}

TEST(Sampling, TotalVariationSmallAtOneMillionShots) {
  const auto st = random_state(5, 2, 2, 9);  // 100 determinants
  const auto c = sample_counts(st, 1000000, 0);
  double tv = 0.0;
  for (std::size_t i = 0; i < st.dimension(); ++i)
    tv += std::abs(static_cast<double>(c.count(st.determinant(i))) / 1e6 - std::norm(st.amplitudes[i]));
  EXPECT_LT(0.5 * tv, 0.01);
}

TEST(Sampling, CiVectorBackend) {
  const std::vector<Determinant> basis{{0b01, 0b01}, {0b10, 0b10}, {0b01, 0b10}};
  const std::vector<double> coeff{0.6, -0.8, 0.0};
  const auto c = sample_counts(2, basis, coeff, 50000, 3);
  EXPECT_EQ(c.count(basis[2]), 0U);
  EXPECT_NEAR(static_cast<double>(c.count(basis[0])) / 5e4, 0.36, 5 * std::sqrt(0.36 * 0.64 / 5e4));
}

TEST(Sampling, Errors) {
  const auto st = random_state(3, 1, 1, 0);
  EXPECT_THROW(sample_counts(st, 0, 0), ConfigError);
  SectorState zero(3, 1, 1);
  EXPECT_THROW(sample_counts(zero, 10, 0), ConfigError);
}

TEST(ReadoutNoise, EdgeProbabilities) {
  const auto c = sample_counts(random_state(4, 2, 2, 1), 5000, 7);
  EXPECT_EQ(apply_readout_noise(c, {0.0, 5}), c);
  const auto flipped = apply_readout_noise(c, {1.0, 5});
  EXPECT_EQ(flipped.total_shots(), c.total_shots());
  for (const auto& [d, n] : c.entries()) EXPECT_EQ(flipped.count({~d.alpha & 0xF, ~d.beta & 0xF}), n);
  EXPECT_THROW(apply_readout_noise(c, {1.5, 0}), ConfigError);
  EXPECT_THROW(apply_readout_noise(c, {-0.1, 0}), ConfigError);
}

TEST(ReadoutNoise, DeterministicPerSeed) {
  const auto c = sample_counts(random_state(4, 2, 1, 2), 100000, 1);
  EXPECT_EQ(apply_readout_noise(c, {0.05, 11}), apply_readout_noise(c, {0.05, 11}));
  EXPECT_NE(apply_readout_noise(c, {0.05, 11}), apply_readout_noise(c, {0.05, 12}));
  EXPECT_EQ(apply_readout_noise(c, {0.05, 11}).total_shots(), c.total_shots());
}

TEST(ReadoutNoise, ForbiddenFractionMatchesConvolutionOracle) {
  const int n = 6, na = 3, nb = 2;
  const double p = 0.05;
  const auto clean = sample_counts(random_state(n, na, nb, 3), 400000, 2);
  const auto noisy = apply_readout_noise(clean, {p, 8});
  const double keep = weight_preserved(n, na, p) * weight_preserved(n, nb, p);
  const double expected = 1.0 - keep;
  double forbidden = 0.0;
  for (const auto& [d, c] : noisy.entries())
    if (d.n_alpha() != na || d.n_beta() != nb) forbidden += static_cast<double>(c);
  const double shots = static_cast<double>(noisy.total_shots());
  const double sigma = std::sqrt(expected * (1 - expected) / shots);
  EXPECT_NEAR(forbidden / shots, expected, 5 * sigma);

  // Alpha Hamming-weight histogram against the per-weight convolution.
  const auto dist = weight_distribution(n, na, p);
  std::vector<double> hist(static_cast<std::size_t>(n + 1), 0.0);
  for (const auto& [d, c] : noisy.entries()) hist[static_cast<std::size_t>(d.n_alpha())] += static_cast<double>(c);
  for (int w = 0; w <= n; ++w) {
    const double q = dist[static_cast<std::size_t>(w)];
    EXPECT_NEAR(hist[static_cast<std::size_t>(w)] / shots, q, 5 * std::sqrt(q * (1 - q) / shots) + 1e-12) << w;
  }
}
