//
// Copyright 2026 The SNH Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>

namespace snh {

// Default engine. All pipeline randomness is drawn from engines seeded by
// derive_seed() so that a single top-level seed fixes every stream.
using Rng = std::mt19937_64;

template <class G>
concept Engine64 = std::uniform_random_bit_generator<G> &&
                   (G::min() == 0) && (G::max() == std::numeric_limits<std::uint64_t>::max());

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Child seed for a named stream: mix64(root ^ fnv1a(stream) ^ mix64(index)).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

// Uniform double in [0, 1) with 53 random bits. Independent of the standard
// library's distribution implementations, so sequences are portable.
template <Engine64 G>
double uniform01(G& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <Engine64 G>
double uniform(G& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Uniform integer in [0, n) by rejection; n > 0.
template <Engine64 G>
std::uint64_t uniform_index(G& g, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = g();
  } while (v >= limit);
  return v % n;
}

// Standard normal via Box-Muller (one variate per call).
template <Engine64 G>
double standard_normal(G& g) {
  double u1;
  do {
    u1 = uniform01(g);
  } while (u1 <= 0.0);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Engine backed by the kernel CSPRNG (getrandom). Not reproducible; for
// deployments only. Note that inverse-CDF Laplace sampling on doubles is not
// hardened against floating-point side channels regardless of the engine.
class SecureEngine {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();
};

}  // namespace snh
