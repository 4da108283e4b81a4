#pragma once

// Counter-based 64-bit generator used for every random decision in the
// toolkit (splits, bootstrap samples, feature subsets, weight init, LIME
// perturbations, random instance choice).
//
// Definition, so other implementations can reproduce streams bit-for-bit:
//
//   mix(z):   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//             return z ^ (z >> 31)
//   output k of stream with key s (k = 0, 1, ...):
//             mix(s + (k + 1) * 0x9E3779B97F4A7C15)       (mod 2^64)
//
// That is SplitMix64 seeded with s. Derived streams (per tree, per grid cell)
// use key derive(s, i) = mix(mix(s) + (i + 1) * 0xD1B54A32D192ED03).
//
//   uniform01        (next >> 11) * 2^-53, in [0, 1)
//   uniform_index(n) Lemire multiply-shift with rejection, in [0, n)
//   normal           Box-Muller cosine branch: sqrt(-2 ln(1 - u1)) cos(2 pi u2),
//                    two uniforms consumed per draw
//   shuffle          Fisher-Yates from the last position down:
//                    for i = n-1 .. 1: swap(a[i], a[uniform_index(i + 1)])

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace dlime {

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t stream) {
    return mix(mix(key) + (stream + 1) * 0xD1B54A32D192ED03ULL);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next() {
    ++counter_;
    return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
  }

  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class T>
  void shuffle(std::span<T> a) {
    for (std::size_t i = a.size(); i-- > 1;) {
      const auto j = static_cast<std::size_t>(uniform_index(i + 1));
      std::swap(a[i], a[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dlime
