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

#include "cefrsynth/random.h"

#include <cmath>

#include "cefrsynth/error.h"

namespace cefrsynth {

uint64_t Fnv1a64(std::string_view data, uint64_t basis) {
  uint64_t hash = basis;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

uint64_t DeriveSeed(uint64_t seed, std::string_view key) {
  uint64_t mixed = Fnv1a64(key, 0xcbf29ce484222325ULL ^ seed);
  // One SplitMix64 finalization round to decorrelate nearby seeds.
  mixed += 0x9e3779b97f4a7c15ULL;
  mixed = (mixed ^ (mixed >> 30)) * 0xbf58476d1ce4e5b9ULL;
  mixed = (mixed ^ (mixed >> 27)) * 0x94d049bb133111ebULL;
  return mixed ^ (mixed >> 31);
}

uint64_t Rng::NextU64() {
  uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::UniformInt(uint64_t bound) {
  if (bound == 0) {
    throw Error(ErrorCode::kInvalidArgument, "UniformInt bound must be > 0");
  }
  // Rejection sampling removes modulo bias.
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % bound);
  uint64_t draw = NextU64();
  while (draw >= limit) draw = NextU64();
  return draw % bound;
}

size_t Rng::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "categorical weights must be finite and non-negative");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "categorical weights must not all be zero");
  }
  const double target = Uniform() * total;
  double cumulative = 0.0;
  size_t last_positive = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  return last_positive;
}

}  // namespace cefrsynth
