#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace explore {

/// Finalizer of the splitmix64 generator; spreads nearby seeds apart.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seeded 64-bit generator with the few draws the library needs. Every draw
/// is computed from raw engine output so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    const int k = static_cast<int>(uniform01() * n);
    return k < n ? k : n - 1;
  }

  /// Index drawn with probability proportional to w(i); w must be nonnegative
  /// with a positive sum.
  template <class Weights>
  int categorical(const Weights& w) {
    double total = 0.0;
    for (std::ptrdiff_t i = 0; i < w.size(); ++i) total += w(i);
    double u = uniform01() * total;
    int last = -1;
    for (std::ptrdiff_t i = 0; i < w.size(); ++i) {
      const double p = w(i);
      if (p <= 0.0) continue;
      last = static_cast<int>(i);
      if (u < p) return last;
      u -= p;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace explore
