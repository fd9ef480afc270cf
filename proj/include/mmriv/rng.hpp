#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mmriv/common.hpp"

namespace mmriv {

// Seed-derivation hash (SplitMix64 finalizer). Used to split a master seed
// into independent substreams; the raw generator is std::mt19937_64 whose
// output sequence is pinned by the C++ standard, so streams reproduce
// across platforms. Distributions are implemented below from raw 64-bit
// draws instead of std::*_distribution, whose output is not portable.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream-splitting rule: substream(master, tag) = splitmix64(master XOR
// splitmix64(tag+1)). Each dataset column / repetition / draw gets its own
// tag, so adding a column never shifts the draws of another.
inline std::uint64_t substream(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(master ^ splitmix64(tag + 1));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller; u1 is shifted into (0, 1] so the log
  /// argument is never zero. Two raw draws per variate, no cached spare.
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Binomial(trials, p) as a sum of Bernoulli draws; trials is tiny here.
  int binomial(int trials, double p) {
    int s = 0;
    for (int t = 0; t < trials; ++t) s += (uniform01() < p) ? 1 : 0;
    return s;
  }

  /// Unbiased integer in [0, bound) by rejection sampling.
  std::uint64_t below(std::uint64_t bound) {
    require(bound > 0, "Rng::below: bound must be positive");
    const std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// m distinct indices from {0,...,n-1}, partial Fisher-Yates, sorted.
  std::vector<int> sample_without_replacement(int n, int m) {
    require(m >= 0 && m <= n, "sample_without_replacement: need 0 <= m <= n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < m; ++i) {
      int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + m);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mmriv
