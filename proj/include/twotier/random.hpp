// Copyright 2026 The twotier Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef TWOTIER_RANDOM_HPP
#define TWOTIER_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace twotier {

/// Random engine used by every stochastic component. All streams are seeded
/// through derive_seed so that independent consumers never share state.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: the same (seed, path) always yields the
/// same child seed, and distinct paths give statistically independent ones.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, path));
}

/// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

// Stream tags for derive_seed.
namespace streams {
inline constexpr std::uint64_t kEvaluation = 1;
inline constexpr std::uint64_t kTwoTier = 2;
inline constexpr std::uint64_t kRandomSearch = 3;
inline constexpr std::uint64_t kMonolithic = 4;
inline constexpr std::uint64_t kEnvironment = 5;
inline constexpr std::uint64_t kAgent = 6;
}  // namespace streams

}  // namespace twotier

#endif  // TWOTIER_RANDOM_HPP
