#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace gridaimd {

// Deterministic 64-bit stream generator (splitmix64). All randomness in the
// project flows from one root seed, split per consumer via derive(), so a run
// is reproducible from the seed alone regardless of library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  double normal(double mean, double sd) {
    // Box-Muller, no spare caching so the draw count stays predictable
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Knuth sampler, fine for the small means used here
  int poisson(double mean) {
    double limit = std::exp(-mean);
    double prod = uniform01();
    int n = 0;
    while (prod > limit) {
      prod *= uniform01();
      ++n;
    }
    return n;
  }

  // Derive an independent child stream from a label and index.
  Rng derive(std::string_view label, std::uint64_t index = 0) const {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ state_;
    for (char c : label) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    Rng child(h);
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

// FNV-1a over arbitrary bytes, used for config hashes and trace digests.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace gridaimd
