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

#ifndef LDN_MODELS_FEATURES_HPP_
#define LDN_MODELS_FEATURES_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ldn/dataio/dataset.hpp"
#include "ldn/diffcore/tensor.hpp"
#include "ldn/models/config.hpp"

namespace ldn::models {

// Model inputs for a batch of B records. Fields a model does not read stay
// empty.
struct Batch {
  std::size_t size = 0;
  diff::Tensor video;   // [B x D_v]
  diff::Tensor audio;   // [B x D_a]
  diff::Tensor stats;   // [B x (6 D + 1)]
  diff::Tensor fused;   // [B x input_dim], linear head
  diff::Tensor frames;  // VLAD frame rows of all records stacked
  std::vector<std::size_t> frame_offsets;  // B + 1 entries into frames
  diff::Tensor padded;  // [B x T_max x D]
};

// Per-record inputs precomputed once for a (dataset, config) pair.
struct FeatureTable {
  std::vector<std::string> ids;
  diff::Tensor video, audio, stats, fused;
  std::vector<diff::Tensor> frame_rows;
  diff::Tensor padded;

  std::size_t rows() const { return ids.size(); }
};

FeatureTable prepare_features(const data::Dataset& dataset, const ModelConfig& config);
// Table for the linear head from an [N x F] matrix.
FeatureTable dense_features(std::vector<std::string> ids, diff::Tensor features);

Batch make_batch(const FeatureTable& table, std::span<const std::size_t> rows);

}  // namespace ldn::models

#endif  // LDN_MODELS_FEATURES_HPP_
