#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace pfr {

// Deterministic splitmix64 stream. Every randomized operation in the library
// draws from this generator so results are a pure function of (input, seed)
// regardless of platform or standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound), unbiased via rejection.
  std::size_t next_below(std::size_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

private:
  std::uint64_t state_;
};

// Derives an independent child seed from a master seed and salt values.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt_a, std::uint64_t salt_b = 0,
                              std::uint64_t salt_c = 0) {
  Rng r(seed ^ (0x632be59bd9b4e019ULL + salt_a * 0x9e3779b97f4a7c15ULL +
                salt_b * 0xc2b2ae3d27d4eb4fULL + salt_c * 0x165667b19e3779f9ULL));
  return r.next_u64();
}

}  // namespace pfr
