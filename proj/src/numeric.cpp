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

#include "photovo/numeric.hpp"

#include <cmath>

namespace photovo {

namespace {

double pairwise_sum_rec(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_rec(v, half) + pairwise_sum_rec(v + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> v) {
  return pairwise_sum_rec(v.data(), v.size());
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double SplitMix64::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u is kept away from zero so the log is finite.
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0);
  const double v = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u));
  spare_ = mag * std::sin(2.0 * M_PI * v);
  have_spare_ = true;
  return mag * std::cos(2.0 * M_PI * v);
}

}  // namespace photovo
