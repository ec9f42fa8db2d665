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

#ifndef LDN_MODELS_MODEL_HPP_
#define LDN_MODELS_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldn/diffcore/graph.hpp"
#include "ldn/diffcore/optim.hpp"
#include "ldn/models/config.hpp"
#include "ldn/models/features.hpp"

namespace ldn::models {

using diff::Graph;
using diff::Shape;
using diff::Tensor;
using diff::TensorMap;
using diff::Var;

enum class TensorKind { kWeight, kBias, kGamma, kBeta, kCoefficients, kPower, kRunningMean, kRunningVar };

struct TensorSpec {
  std::string name;
  Shape shape;
  TensorKind kind;
  std::size_t fan_in = 0;  // weights only
};

// Every tensor of the architecture in layer order; running statistics are
// listed with the kinds kRunningMean / kRunningVar.
std::vector<TensorSpec> tensor_layout(const ModelConfig& config);
std::uint64_t parameter_count(const ModelConfig& config);  // trainable values only

struct ModelParams {
  ModelConfig config;
  TensorMap params;   // trainable
  TensorMap buffers;  // batch-norm running statistics
  std::string penultimate;

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return canonical_text(a.config) == canonical_text(b.config) && a.params == b.params &&
           a.buffers == b.buffers && a.penultimate == b.penultimate;
  }
};

// Weights U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases and BN shifts 0, BN
// scales 1; running mean 0 and var 1; frame-mix coefficients 1/T_max;
// power p0. The linear head is all zeros.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

struct ForwardOutput {
  Var probabilities;  // [B x vocabulary]
  Var penultimate;    // [B x penultimate_width]
  Var fused;          // head input of the frame models (BOW or mixed frames)
};

// Appends the model to g. Parameters enter the graph under their own names;
// batch-norm running statistics are read from m.buffers.
ForwardOutput forward(Graph& g, const ModelParams& m, const Batch& batch);

// Eval-mode outputs.
Tensor predict(const ModelParams& m, const Batch& batch);
Tensor penultimate_features(const ModelParams& m, const Batch& batch);
// Batched over all rows of a feature table.
Tensor predict_all(const ModelParams& m, const FeatureTable& table, std::size_t batch_size = 256);
Tensor penultimate_all(const ModelParams& m, const FeatureTable& table,
                       std::size_t batch_size = 256);

// "LDNM" v1: magic, u32 version, u32-length-prefixed architecture tag,
// u32-length-prefixed canonical config text, u32 tensor count, then per
// tensor in name order: u32 name length, name, u32 rank, u64 extents,
// f64 data. All integers little-endian.
inline constexpr std::uint32_t kModelFormatVersion = 1;
std::vector<std::uint8_t> encode_model(const ModelParams& m);
ModelParams decode_model(const std::vector<std::uint8_t>& bytes);
void serialize_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams deserialize_model(const std::filesystem::path& path);
// Exact serialized size computed from the layout alone (no allocation).
std::uint64_t size_bytes(const ModelConfig& config);

struct GradcheckEntry {
  std::string tensor;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
};

struct GradcheckReport {
  std::string architecture;
  std::vector<GradcheckEntry> entries;
  double max_relative_error = 0.0;
};

// BCE through the whole model on a random 2-sample batch, eval-mode batch
// norm, dropout forced to 0, compared against central differences for
// every parameter coordinate (or a seeded sample of at most
// max_coordinates per tensor when non-zero).
GradcheckReport gradcheck(const ModelConfig& config, std::uint64_t seed,
                          std::size_t max_coordinates = 0);

}  // namespace ldn::models

#endif  // LDN_MODELS_MODEL_HPP_
