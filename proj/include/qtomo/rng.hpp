#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace qtomo::rng {

// splitmix64 step: advances `state` and returns the next output. Used to
// expand user seeds into generator state and to derive per-stream subseeds.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256++ with splitmix64 seeding. All sampling helpers below are built
// from integer output with fixed arithmetic (no std:: distributions), so a
// given seed yields the same value stream on any IEEE-754 platform.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed);

  std::uint64_t next();

  // Uniform double in [0, 1), 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; generates pairs, caches the second.
  double normal();

  // Complex with independent standard-normal real and imaginary parts.
  std::complex<double> cnormal();

  // Uniform integer in [0, n), unbiased via rejection. n > 0.
  std::uint64_t below(std::uint64_t n);

  // Independent generator for a named substream; distinct `stream` values
  // give decorrelated state (seeded from splitmix64 of hash(state, stream)).
  Xoshiro256pp fork(std::uint64_t stream);

 private:
  Xoshiro256pp() = default;
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// k distinct values from {0, ..., n-1}, ascending. Partial Fisher-Yates on an
// index table, then sort; draw order depends only on the generator stream.
std::vector<std::size_t> sample_without_replacement(std::size_t k, std::size_t n,
                                                    Xoshiro256pp& gen);

}  // namespace qtomo::rng
