// Copyright 2026 The hetlearn Authors
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

#ifndef HETLEARN_RNG_HPP_
#define HETLEARN_RNG_HPP_

// Counter-based 64-bit generator.
//
// A stream is identified by a 64-bit key. The n-th output (n = 0, 1, ...) is
//
//     Mix64(key + (n + 1) * 0x9E3779B97F4A7C15)
//
// where Mix64 is the SplitMix64 finalizer. Outputs depend only on (key, n), so
// streams are reproducible bit-for-bit on every platform, and jumping ahead is
// a counter assignment. All distributions below are implemented here rather
// than through <random> because the standard distributions are
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <span>

namespace hetlearn {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed of stream `id` under `base`. Bijective in `id` for a fixed base, so
// distinct ids never share a stream. Stable across versions.
constexpr std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t id) {
  return Mix64(Mix64(base) + (id + 1) * kGoldenGamma);
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t NextU64() {
    ++counter_;
    return Mix64(key_ + counter_ * kGoldenGamma);
  }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  bool Bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return Uniform01() < p;
  }

  // Standard exponential via inversion; 1 - u lies in (0, 1].
  double Exponential() { return -std::log(1.0 - Uniform01()); }

  // Index drawn from `probs` (non-negative, summing to ~1) by inversion.
  // Rounding slack at the top falls on the last index with positive mass.
  int Categorical(std::span<const double> probs) {
    const double u = Uniform01();
    double cumulative = 0.0;
    int last_positive = 0;
    for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
      if (probs[a] <= 0.0) continue;
      last_positive = a;
      cumulative += probs[a];
      if (u < cumulative) return a;
    }
    return last_positive;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hetlearn

#endif  // HETLEARN_RNG_HPP_
