#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fcm {

namespace detail {

// splitmix64 finalizer, used to derive child seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// Deterministic random source. All randomness in the library flows through
// this wrapper; the raw mt19937_64 stream is mapped to doubles and bounded
// integers by hand so that results are identical across standard libraries
// (std::uniform_*_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n < 2) return 0;
    const std::uint64_t mask = ~0ull >> std::countl_zero(n - 1);
    for (;;) {
      const std::uint64_t x = engine_() & mask;
      if (x < n) return x;
    }
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent stream derived from this generator's seed, not its state.
  Rng child(std::uint64_t salt) const {
    return Rng(detail::mix64(seed_ ^ detail::mix64(salt)));
  }

  Rng child(std::string_view label) const {
    return child(detail::fnv1a64(label));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace fcm
