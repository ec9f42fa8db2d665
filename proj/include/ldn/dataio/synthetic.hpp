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

#ifndef LDN_DATAIO_SYNTHETIC_HPP_
#define LDN_DATAIO_SYNTHETIC_HPP_

#include <cstdint>
#include <vector>

#include "ldn/dataio/dataset.hpp"
#include "ldn/random.hpp"

namespace ldn::data {

// Label corruption: each clean positive survives with probability
// 1 - fn_rate, then Poisson(fp_rate) spurious labels are drawn uniformly
// (without replacement) from the labels that are not clean positives.
struct NoiseConfig {
  double fn_rate = 0.0;
  double fp_rate = 0.0;
  std::uint64_t seed = 0;
};

struct GeneratorConfig {
  std::uint32_t num_videos = 2000;
  std::uint32_t vocabulary_size = 50;
  std::uint32_t video_dim = 64;
  std::uint32_t audio_dim = 16;
  std::uint32_t min_labels = 1;
  std::uint32_t max_labels = 4;
  // Label popularity follows weight(l) = 1 / (l + 1)^label_skew.
  double label_skew = 0.5;
  std::uint32_t num_groups = 5;

  double video_noise = 0.12;        // per-coordinate stddev
  double audio_informativeness = 0.6;
  double audio_noise = 0.15;

  bool with_frames = true;
  std::uint32_t min_scenes = 2;
  std::uint32_t max_scenes = 6;
  std::uint32_t min_scene_length = 3;
  std::uint32_t max_scene_length = 8;
  // Scale of the scene-specific direction added to the label signal.
  double scene_spread = 1.2;
  // Adjacent scene centers are resampled until their cosine distance
  // exceeds this value.
  double scene_separation = 0.4;
  double frame_noise = 0.01;
};

struct SyntheticData {
  Dataset dataset;
  // Number of scenes planted in each record's frame sequence (empty when
  // frames are disabled).
  std::vector<std::uint32_t> planted_scenes;
};

// Deterministic in (config, noise, seed). Every feature value is rounded to
// f32 so the result round-trips through the binary format exactly.
SyntheticData generate_synthetic(const GeneratorConfig& config,
                                 const NoiseConfig& noise, std::uint64_t seed);

// Corrupts one clean label set; exposed for the noise-rate tests.
LabelSet corrupt_labels(const LabelSet& clean, std::uint32_t vocabulary_size,
                        const NoiseConfig& noise, Rng& rng);

}  // namespace ldn::data

#endif  // LDN_DATAIO_SYNTHETIC_HPP_
