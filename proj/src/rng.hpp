#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cellnas {

// Seeded random source with platform-independent derived distributions.
// The std:: distribution classes are implementation-defined, so uniform,
// Bernoulli and normal variates are derived here from the raw 64-bit engine
// output; a given seed yields the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer on [lo, hi], inclusive. Requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();

  // True with probability p; p <= 0 never, p >= 1 always.
  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller (consumes two draws, keeps no state).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Combines several keys into one well-mixed seed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

}  // namespace cellnas
