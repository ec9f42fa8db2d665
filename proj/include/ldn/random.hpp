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

#ifndef LDN_RANDOM_HPP_
#define LDN_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace ldn {

// Portable random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so every
// distribution used by the library is written out here:
//   uniform      53 high bits of one engine draw, scaled to [0, 1)
//   uniform_int  rejection sampling on the full 64-bit draw
//   normal       Box-Muller, one value per call (no cached pair)
//   gamma        Marsaglia-Tsang squeeze, with the u^(1/a) boost for a < 1
//   beta         X / (X + Y) on two gamma draws
//   poisson      Knuth's multiplicative method
//   shuffle      Fisher-Yates from the back
// Seeds for sub-streams are derived with SplitMix64 so that streams tagged
// differently never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t splitmix64(std::uint64_t x);
  // Seed for an independent stream identified by (seed, tag, index).
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag,
                              std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t uniform_int(std::uint64_t n);  // in [0, n)
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double gamma(double shape);
  double beta(double a, double b);
  std::uint64_t poisson(double lambda);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ldn

#endif  // LDN_RANDOM_HPP_
