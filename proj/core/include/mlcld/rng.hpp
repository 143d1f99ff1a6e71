#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mlcld {

/// Seedable deterministic generator. Wraps std::mt19937_64, whose output
/// sequence is fixed by the standard; every derived quantity (uniforms,
/// integers, shuffles) is computed here rather than through the
/// implementation-defined std distributions, so a given (seed, stream,
/// call sequence) yields identical values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> items);

  /// Independent generator for a named sub-stream of the same seed.
  Rng derive(std::uint64_t stream) const { return Rng(seed_, stream); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace mlcld
