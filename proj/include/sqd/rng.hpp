#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sqd {

/// Philox4x32-10 counter-based generator.
///
/// A (key, stream) pair selects an independent sequence; position within
/// the sequence is a plain counter, so any block of draws can be reproduced
/// without replaying earlier ones. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t key, std::uint64_t stream, std::uint64_t position = 0)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_(stream),
        counter_(position) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    while (true) {
      const std::uint64_t x = (*this)();
      if (x < limit) return x % n;
    }
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53U;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57U;
  static constexpr std::uint32_t kW0 = 0x9E3779B9U;
  static constexpr std::uint32_t kW1 = 0xBB67AE85U;

  void refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kW0;
      key[1] += kW1;
    }
    ++counter_;
    // Served from the back: buffer_[1] first, then buffer_[0].
    buffer_[1] = (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
    buffer_[0] = (static_cast<std::uint64_t>(ctr[3]) << 32) | ctr[2];
    buffered_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

enum class StreamPurpose : std::uint64_t {
  kShotSampling = 1,
  kReadoutNoise = 2,
  kRecovery = 3,
  kBatchDraw = 4,
  kEigensolverGuess = 5,
};

/// Stream identifier for a (purpose, iteration, batch/block) tuple.
constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t iteration = 0, std::uint64_t block = 0) {
  return (static_cast<std::uint64_t>(purpose) << 56) | ((iteration & 0xFFFFULL) << 40) | (block & 0xFFFFFFFFFFULL);
}

}  // namespace sqd
