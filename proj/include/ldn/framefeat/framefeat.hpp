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

#ifndef LDN_FRAMEFEAT_FRAMEFEAT_HPP_
#define LDN_FRAMEFEAT_FRAMEFEAT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ldn/diffcore/tensor.hpp"

namespace ldn::frame {

using diff::Tensor;

// The mode of continuous features is taken on the grid k / kModeLevels.
inline constexpr double kModeLevels = 255.0;

struct FrameStats {
  std::vector<double> mean, stddev, median, min, max, mode;
  std::size_t length = 0;

  // [mean | std | median | min | max | mode | length], 6*D + 1 values.
  std::vector<double> flatten() const;
};

// frames is [T x D], T >= 1. Population std, lower median for even T, mode
// of values snapped to the 1/255 grid (ties go to the smaller value).
FrameStats frame_statistics(const Tensor& frames);

Tensor center_frames(const Tensor& frames);

// 1 - cos; zero-norm vectors give 0.
double cosine_distance(std::span<const double> a, std::span<const double> b);

struct SceneSegmentation {
  std::vector<std::size_t> boundaries;  // scene start frames, begins with 0
  double threshold = 0.0;
};

SceneSegmentation segment_scenes(const Tensor& frames, double tau = 0.2);

enum class SceneRepresentative { kMean, kFirst };

// One row per scene.
Tensor scene_representatives(const Tensor& frames, const SceneSegmentation& seg,
                             SceneRepresentative rep = SceneRepresentative::kMean);

struct CentroidVocabulary {
  Tensor centroids;  // [k x D]
  double inertia = 0.0;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

// Greedy k-means++ seeding followed by exact Lloyd iterations. Stops when no
// centroid moves by tol or more (Euclidean) or after max_iter iterations.
CentroidVocabulary kmeans_fit(const Tensor& vectors, std::size_t k,
                              std::size_t max_iter = 50, double tol = 1e-8,
                              std::uint64_t seed = 0);

// Nearest centroid by squared Euclidean distance, ties to the lower index.
std::size_t nearest_centroid(std::span<const double> x, const Tensor& centroids);

// Indices of the first frame assigned to each distinct centroid, in order of
// first occurrence.
std::vector<std::size_t> unique_centroid_indices(const Tensor& frames,
                                                 const CentroidVocabulary& vocab);
Tensor unique_centroid_subsample(const Tensor& frames, const CentroidVocabulary& vocab);

struct PaddedFrames {
  Tensor frames;  // [T_max x D]
  std::size_t valid_length = 0;
};

PaddedFrames pad_truncate(const Tensor& frames, std::size_t t_max);

Tensor select_rows(const Tensor& m, std::span<const std::size_t> rows);

}  // namespace ldn::frame

#endif  // LDN_FRAMEFEAT_FRAMEFEAT_HPP_
