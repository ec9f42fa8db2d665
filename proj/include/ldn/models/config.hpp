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

#ifndef LDN_MODELS_CONFIG_HPP_
#define LDN_MODELS_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <variant>

namespace ldn::models {

enum class Modality { kBoth, kVideoOnly, kAudioOnly, kFused };
enum class Activation { kRelu, kTanh };
enum class FrameSource { kRaw, kScenes };

// Residual MLP. With kFused the model has a single input branch of width
// fused_dim (used as the head of the frame models).
struct ResNetLikeConfig {
  std::uint32_t inner_size = 2048;
  std::uint32_t av_id_block_num = 1;
  std::uint32_t concat_id_block_num = 1;
  double dropout_rate = 0.5;
  Modality modality = Modality::kBoth;
  Activation activation = Activation::kRelu;
  // Adds a third branch over the 6*frame_dim+1 frame statistics.
  bool use_frame_stats = false;
  std::uint32_t vocabulary_size = 0;
  std::uint32_t video_dim = 0;
  std::uint32_t audio_dim = 0;
  std::uint32_t fused_dim = 0;

  std::uint32_t frame_dim() const { return video_dim + audio_dim; }
  std::uint32_t stats_dim() const { return 6 * frame_dim() + 1; }
};

// Soft-assignment bag of words over frames, with a learnable power on the
// rectified projections; the K-dim histogram feeds a ResNet-like head.
struct VladBowConfig {
  std::uint32_t clusters = 16;
  double p0 = 1.0;
  FrameSource frames = FrameSource::kScenes;
  double scene_tau = 0.2;
  std::uint32_t frame_dim = 0;
  ResNetLikeConfig head;  // modality kFused, fused_dim = clusters
};

// m trainable linear combinations of the padded frame sequence.
struct FrameMixConfig {
  std::uint32_t combinations = 4;
  std::uint32_t t_max = 32;
  std::uint32_t frame_dim = 0;
  ResNetLikeConfig head;  // modality kFused, fused_dim = combinations * frame_dim
};

// affine + sigmoid; the stacking head.
struct LinearHeadConfig {
  std::uint32_t input_dim = 0;
  std::uint32_t vocabulary_size = 0;
};

using ModelConfig = std::variant<ResNetLikeConfig, VladBowConfig, FrameMixConfig, LinearHeadConfig>;

std::string architecture_tag(const ModelConfig& config);  // resnet|vladbow|framemix|linear
std::uint32_t vocabulary_size(const ModelConfig& config);
// Fills derived head fields (modality, fused_dim, vocabulary) from the outer
// config. Idempotent.
void normalize(ModelConfig& config);
// Throws InputError on invalid values.
void validate(const ModelConfig& config);

// Canonical "key = value" text, round-trippable through parse_model_config.
std::string canonical_text(const ModelConfig& config);
// Starts from the defaults of the named architecture (or `base` when it has
// the same architecture) and applies every key; unknown keys are rejected.
ModelConfig parse_model_config(const std::string& text, const ModelConfig* base = nullptr);

// Sets vocabulary and input dims; a config that already names different
// non-zero dims is an InputError.
void bind_dims(ModelConfig& config, std::uint32_t vocabulary_size, std::uint32_t video_dim,
               std::uint32_t audio_dim);

// Layer whose activation feeds the final affine.
std::string penultimate_layer(const ModelConfig& config);
std::uint32_t penultimate_width(const ModelConfig& config);

bool needs_frames(const ModelConfig& config);

}  // namespace ldn::models

#endif  // LDN_MODELS_CONFIG_HPP_
