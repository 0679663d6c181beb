#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dynperc {

using Rng = std::mt19937_64;

// Splittable seed source: a 64-bit master seed plus a stream index.
// The same (seed, index) reproduces the same engine bit-for-bit; distinct
// indices give distinct, statistically independent streams.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }

  Rng engine(std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(master_),
                      static_cast<std::uint32_t>(master_ >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return Rng(seq);
  }

  // Child stream for a sub-experiment; index spaces of parent and child do
  // not overlap in practice since the child master is a mixed hash.
  SeedStream child(std::uint64_t index) const {
    return SeedStream(mix(master_ ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t master_;
};

inline double uniform01(Rng& rng) {
  // 53 random bits, never exactly 0.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) {
  return -std::log(uniform01(rng)) / rate;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Uniform integer in [0, n) for n >= 1.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace dynperc
