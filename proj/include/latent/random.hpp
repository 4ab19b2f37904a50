#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace latent {

// Seedable generator whose output sequence is fixed by the C++ standard
// (mt19937_64). Bounded and real draws are derived here rather than through
// <random> distributions, whose algorithms vary between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t UniformBelow(std::uint64_t bound) {
    // Rejection on the top of the range removes modulo bias.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached second value).
  double Normal();

  template <typename T>
  void Shuffle(std::span<T> items) {
    // Fisher-Yates, high index downwards.
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = UniformBelow(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes a base seed with a string key so that per-item streams are stable
// regardless of iteration order.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key);

}  // namespace latent
