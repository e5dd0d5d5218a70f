/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef RMAE_RNG_HPP_
#define RMAE_RNG_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <utility>
#include <vector>

namespace rmae {

// Counter-based random numbers. A draw is a pure function of its key words,
// so results never depend on evaluation order or thread count.
namespace rng {

inline constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t Hash(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = Mix64(0x9e3779b97f4a7c15ULL);
  std::uint64_t i = 0;
  for (std::uint64_t w : words) {
    h = Mix64(h ^ Mix64(w + 0x9e3779b97f4a7c15ULL * (++i)));
  }
  return h;
}

// 53 random mantissa bits mapped onto [0, 1).
inline constexpr double ToUnit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double Uniform(std::initializer_list<std::uint64_t> words) {
  return ToUnit(Hash(words));
}

// Domain-separation tags for the different consumers of a seed.
enum Tag : std::uint64_t {
  kGroupSelect = 1,
  kVoxelDrop = 2,
  kSceneLayout = 3,
  kSceneNoise = 4,
  kShuffle = 5,
  kEpochMask = 6,
  kEvalMask = 7,
  kQueryBalance = 8,
  kInit = 9,
};

}  // namespace rng

/// Sequential view over the counter-based generator: draw i is Hash(key, i).
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  Stream(std::initializer_list<std::uint64_t> words) : key_(rng::Hash(words)) {}

  std::uint64_t NextU64() { return rng::Hash({key_, counter_++}); }

  double NextUnit() { return rng::ToUnit(NextU64()); }

  double NextUniform(double lo, double hi) { return lo + (hi - lo) * NextUnit(); }

  /// Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t NextBelow(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal via Box-Muller; no cached second value so the stream
  /// position stays a simple counter.
  double NextNormal() {
    double u1 = NextUnit();
    const double u2 = NextUnit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(NextBelow(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rmae

#endif  // RMAE_RNG_HPP_
