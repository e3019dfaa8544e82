// Copyright 2026 The StegGuard Authors
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

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "stegguard/common.hpp"

namespace sg {
inline namespace SG_REAL_NS {

// Seeded random stream. Value conversions are done here rather than through
// <random> distributions, whose outputs differ between standard libraries.
//
// Streams are derived from a master seed and a label ("data", "secrets",
// "init", "attack", ...) so that one stream can change without disturbing
// the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}
  Rng(std::uint64_t seed, std::string_view stream)
      : engine_(mix(seed ^ label_hash(stream))) {}
  Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index)
      : engine_(mix(mix(seed ^ label_hash(stream)) + index)) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  // Child stream, independent of further draws from this one.
  Rng fork(std::string_view label) { return Rng(next(), label); }

  static std::uint64_t label_hash(std::string_view s);
  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace SG_REAL_NS
}  // namespace sg
