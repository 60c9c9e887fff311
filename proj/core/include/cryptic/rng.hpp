#pragma once

#include <cstddef>
#include <cstdint>

namespace cryptic {

/// Seeded, splittable pseudo-random stream (xoshiro256** seeded through
/// splitmix64). All conversions to reals and bounded integers are done here
/// so that results are bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform in the open interval (lo, hi); requires lo < hi.
  double uniform_open(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p);

  /// Independent child stream. Does not advance this stream, so the child
  /// depends only on (current state, key).
  Rng split(std::uint64_t key) const;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  Rng() = default;
  void reseed(std::uint64_t seed);

  std::uint64_t seed_ = 0;
  std::uint64_t s_[4] = {0, 0, 0, 0};
};

/// Stable 64-bit FNV-1a over arbitrary bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace cryptic
