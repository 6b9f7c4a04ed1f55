#pragma once

#include <cstdint>
#include <limits>

namespace cimbs {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound); bound > 0. Lemire's unbiased method.
  std::uint64_t below(std::uint64_t bound) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

/// Purpose tags that keep the random streams of different stages disjoint.
enum class StreamPurpose : std::uint64_t {
  kSynthetic = 1,
  kScenario = 2,
  kRoundSets = 3,
  kFinalSets = 4,
  kEvaluation = 5,
  kStochasticGradient = 6,
  kIterateEvaluation = 7,
  kOracle = 8,
  kGeneric = 9,
};

/// A family of independent streams indexed by (purpose, index) under one
/// master seed. Stream `i` of a Monte Carlo loop serves simulation `i`, so
/// results do not depend on how the loop is split across workers.
class StreamFamily {
 public:
  StreamFamily(std::uint64_t master, std::uint64_t purpose) : master_(master), purpose_(purpose) {}
  StreamFamily(std::uint64_t master, StreamPurpose purpose)
      : StreamFamily(master, static_cast<std::uint64_t>(purpose)) {}

  Rng at(std::uint64_t index) const {
    std::uint64_t s = index;
    std::uint64_t key = splitmix64(s) ^ key_base();
    return Rng(key);
  }

  /// A nested family, e.g. one per solver run or per sampling round.
  StreamFamily child(std::uint64_t tag) const {
    std::uint64_t s = tag ^ 0xD1B54A32D192ED03ULL;
    return StreamFamily(key_base() ^ splitmix64(s), purpose_);
  }

  std::uint64_t master() const { return master_; }
  std::uint64_t purpose() const { return purpose_; }

 private:
  std::uint64_t key_base() const {
    std::uint64_t s = master_;
    std::uint64_t a = splitmix64(s);
    std::uint64_t p = purpose_ * 0xA0761D6478BD642FULL;
    return a ^ splitmix64(p);
  }

  std::uint64_t master_;
  std::uint64_t purpose_;
};

}  // namespace cimbs
