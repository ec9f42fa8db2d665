/*
 * Copyright 2026 The LabelDenoise Authors.
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

#include "ldn/random.hpp"

#include <cmath>
#include <numbers>

#include "ldn/error.hpp"

namespace ldn {

std::uint64_t Rng::splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::string_view tag,
                          std::uint64_t index) {
  // FNV-1a over the tag, then mixed with the seed and index.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + index);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  LDN_REQUIRE(n > 0, "uniform_int: empty range");
  // Largest multiple of n representable in 64 bits; draws above it are
  // rejected so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
  LDN_REQUIRE(shape > 0.0, "gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = 1.0 - uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

std::uint64_t Rng::poisson(double lambda) {
  LDN_REQUIRE(lambda >= 0.0, "poisson: rate must be non-negative");
  if (lambda == 0.0) return 0;
  // Split large rates into chunks so exp(-lambda) never underflows.
  std::uint64_t total = 0;
  while (lambda > 0.0) {
    const double chunk = lambda > 500.0 ? 500.0 : lambda;
    lambda -= chunk;
    const double limit = std::exp(-chunk);
    double prod = uniform();
    while (prod > limit) {
      ++total;
      prod *= uniform();
    }
  }
  return total;
}

}  // namespace ldn
