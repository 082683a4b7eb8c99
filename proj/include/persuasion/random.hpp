#pragma once

#include <cstdint>
#include <limits>

namespace persuasion {

// SplitMix64 (Steele, Lea & Flood). Every randomized routine in the library
// draws from this generator so that instance streams are reproducible from a
// single 64-bit seed, independently of the standard library implementation.
//
//   next():    state += 0x9e3779b97f4a7c15, then the 64-bit finalizer
//   uniform(): (next() >> 11) * 2^-53, a double in [0, 1)
//   below(n):  rejection sampling on next() for an unbiased value in [0, n)
//   split():   a child generator seeded with next()
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  SplitMix64 split() noexcept { return SplitMix64(next()); }

 private:
  std::uint64_t state_;
};

}  // namespace persuasion
