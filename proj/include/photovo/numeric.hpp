/******************************************************************************
 * Copyright 2026 The photovo Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/

#ifndef PHOTOVO_NUMERIC_HPP
#define PHOTOVO_NUMERIC_HPP

#include <cstddef>
#include <cstdint>
#include <span>

namespace photovo {

/// Pairwise (cascade) summation. Deterministic for a given input order and
/// considerably more accurate than a running sum on long loss reductions.
double pairwise_sum(std::span<const double> v);

/// Deterministic 64-bit mix generator (splitmix64). Used everywhere a seeded
/// stream is required so that results are reproducible across platforms and
/// standard-library versions, which std::random distributions do not
/// guarantee.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal deviate (Box-Muller).
  double gaussian();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace photovo

#endif  // PHOTOVO_NUMERIC_HPP
