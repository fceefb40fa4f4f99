//
// Copyright 2026 The cefrsynth Authors
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

#ifndef CEFRSYNTH_RANDOM_H_
#define CEFRSYNTH_RANDOM_H_

#include <cstdint>
#include <span>
#include <string_view>

namespace cefrsynth {

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
uint64_t Fnv1a64(std::string_view data, uint64_t basis = 0xcbf29ce484222325ULL);

// Mixes a base seed with a string key into an independent stream seed.
uint64_t DeriveSeed(uint64_t seed, std::string_view key);

// SplitMix64 generator with hand-rolled distributions. The standard library's
// distributions are implementation-defined, which would break bit-exact
// reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64();

  // Uniform in [0, 1) with 53 bits of precision.
  double Uniform();

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t UniformInt(uint64_t bound);

  // Index drawn proportionally to non-negative weights. At least one weight
  // must be positive.
  size_t Categorical(std::span<const double> weights);

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace cefrsynth

#endif  // CEFRSYNTH_RANDOM_H_
