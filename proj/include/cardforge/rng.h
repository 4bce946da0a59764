/*
 * Copyright 2026 The Cardforge Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CARDFORGE_RNG_H_
#define CARDFORGE_RNG_H_

#include <cstdint>
#include <span>
#include <string_view>

namespace cardforge {

// SplitMix64 output finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// 64-bit FNV-1a over the bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed of one replicate (or trial, or synthetic block):
//   mix64(mix64(mix64(master ^ C1) ^ fnv1a64(label)) ^ (index * C2 + C3))
// with C1 = 0x5851f42d4c957f2d, C2 = 0x9e3779b97f4a7c15 (odd, so the index
// term is a bijection), C3 = 0xd1b54a32d192ed03. For a fixed (master, label)
// distinct indices always give distinct seeds.
std::uint64_t replicate_seed(std::uint64_t master_seed,
                             std::string_view stream_label,
                             std::uint64_t replicate_index);

// SplitMix64 (Steele, Lea & Flood 2014): state advances by the golden-ratio
// increment and each output is mix64(state). Small, splittable, and identical
// on every platform, which is all the resampling needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform on [0, bound) by Lemire's multiply-and-reject; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t reject_under = (0 - bound) % bound;
      while (low < reject_under) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal by the Marsaglia polar method.
  double normal();
  // Gamma(shape, 1) by Marsaglia & Tsang; shape > 0.
  double gamma(double shape);
  // Beta(a, b) as a ratio of gammas.
  double beta(double a, double b);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Multiplicities of one bootstrap resample: counts.size() draws with
// replacement from counts.size() items. Overwrites `counts`.
void draw_resample(Rng& rng, std::span<std::uint32_t> counts);

}  // namespace cardforge

#endif  // CARDFORGE_RNG_H_
