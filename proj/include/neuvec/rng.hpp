// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The neuvec authors

#ifndef NEUVEC_RNG_HPP
#define NEUVEC_RNG_HPP

#include <cstdint>

namespace neuvec {

/// Counter-based deterministic pseudorandom generator (splitmix64 over a
/// seed+counter state). Identical (seed, counter) produces an identical
/// stream on every platform, and the full state is two 64-bit integers, so
/// it can be checkpointed and restored exactly.
///
/// A state is single-owner; for concurrent use derive independent streams
/// with split().
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53 bits of randomness.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n), n >= 1. Uses rejection-free modulo (the tiny bias
  /// is irrelevant at n << 2^64).
  std::uint64_t below(std::uint64_t n) noexcept { return next_u64() % n; }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per call
  /// so the stream position is a pure function of the number of draws.
  double normal() noexcept;

  /// Derives an independent deterministic stream. Different tags (or
  /// different parent seeds) give unrelated streams.
  RngState split(std::uint64_t tag) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace neuvec

#endif
