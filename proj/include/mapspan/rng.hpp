#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mapspan/error.hpp"

namespace mapspan {

// Seeded generator with distribution code owned here, so streams are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n) without modulo bias.
  std::size_t index(std::size_t n) {
    if (n == 0) fail(ErrorCode::invalid_argument, "Rng::index: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % span);
  }

  // Uniform integer in [lo, hi], inclusive.
  std::size_t range(std::size_t lo, std::size_t hi) {
    if (lo > hi) fail(ErrorCode::invalid_argument, "Rng::range: lo > hi");
    return lo + index(hi - lo + 1);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mapspan
