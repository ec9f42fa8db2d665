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

#include "ldn/models/config.hpp"

#include <vector>

#include "ldn/config_text.hpp"
#include "ldn/error.hpp"

namespace ldn::models {

namespace {

const std::vector<std::string> kModalities{"both", "video_only", "audio_only", "fused"};
const std::vector<std::string> kActivations{"relu", "tanh"};
const std::vector<std::string> kFrameSources{"raw", "scenes"};

template <typename... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <typename... F>
Overloaded(F...) -> Overloaded<F...>;

void validate_resnet(const ResNetLikeConfig& c, const std::string& what) {
  LDN_REQUIRE(c.inner_size >= 1, what + ": inner_size must be >= 1");
  LDN_REQUIRE(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0,
              what + ": dropout_rate must be in [0, 1)");
  LDN_REQUIRE(c.vocabulary_size >= 1, what + ": vocabulary_size must be >= 1");
  switch (c.modality) {
    case Modality::kBoth:
      LDN_REQUIRE(c.video_dim >= 1 && c.audio_dim >= 1, what + ": video_dim and audio_dim must be >= 1");
      break;
    case Modality::kVideoOnly:
      LDN_REQUIRE(c.video_dim >= 1, what + ": video_dim must be >= 1");
      break;
    case Modality::kAudioOnly:
      LDN_REQUIRE(c.audio_dim >= 1, what + ": audio_dim must be >= 1");
      break;
    case Modality::kFused:
      LDN_REQUIRE(c.fused_dim >= 1, what + ": fused_dim must be >= 1");
      LDN_REQUIRE(!c.use_frame_stats, what + ": frame statistics need a video/audio model");
      break;
  }
  if (c.use_frame_stats) {
    LDN_REQUIRE(c.frame_dim() >= 1, what + ": frame statistics need video_dim + audio_dim >= 1");
  }
}

void write_head(KeyWriter& w, const ResNetLikeConfig& h) {
  w.put("head.inner_size", h.inner_size);
  w.put("head.av_id_block_num", h.av_id_block_num);
  w.put("head.concat_id_block_num", h.concat_id_block_num);
  w.put("head.dropout_rate", h.dropout_rate);
  w.put("head.activation", kActivations[static_cast<std::size_t>(h.activation)]);
}

void read_head(KeyReader& r, ResNetLikeConfig& h) {
  r.read("head.inner_size", h.inner_size);
  r.read("head.av_id_block_num", h.av_id_block_num);
  r.read("head.concat_id_block_num", h.concat_id_block_num);
  r.read("head.dropout_rate", h.dropout_rate);
  std::size_t act = static_cast<std::size_t>(h.activation);
  r.read_choice("head.activation", kActivations, act);
  h.activation = static_cast<Activation>(act);
}

ResNetLikeConfig default_head() {
  ResNetLikeConfig h;
  h.modality = Modality::kFused;
  return h;
}

}  // namespace

std::string architecture_tag(const ModelConfig& config) {
  return std::visit(Overloaded{[](const ResNetLikeConfig&) { return std::string("resnet"); },
                               [](const VladBowConfig&) { return std::string("vladbow"); },
                               [](const FrameMixConfig&) { return std::string("framemix"); },
                               [](const LinearHeadConfig&) { return std::string("linear"); }},
                    config);
}

std::uint32_t vocabulary_size(const ModelConfig& config) {
  return std::visit(Overloaded{[](const ResNetLikeConfig& c) { return c.vocabulary_size; },
                               [](const VladBowConfig& c) { return c.head.vocabulary_size; },
                               [](const FrameMixConfig& c) { return c.head.vocabulary_size; },
                               [](const LinearHeadConfig& c) { return c.vocabulary_size; }},
                    config);
}

void normalize(ModelConfig& config) {
  if (auto* v = std::get_if<VladBowConfig>(&config)) {
    v->head.modality = Modality::kFused;
    v->head.use_frame_stats = false;
    v->head.fused_dim = v->clusters;
    v->head.video_dim = v->head.audio_dim = 0;
  } else if (auto* f = std::get_if<FrameMixConfig>(&config)) {
    f->head.modality = Modality::kFused;
    f->head.use_frame_stats = false;
    f->head.fused_dim = f->combinations * f->frame_dim;
    f->head.video_dim = f->head.audio_dim = 0;
  }
}

void validate(const ModelConfig& config) {
  std::visit(Overloaded{[](const ResNetLikeConfig& c) { validate_resnet(c, "resnet config"); },
                        [](const VladBowConfig& c) {
                          LDN_REQUIRE(c.clusters >= 1, "vladbow config: clusters must be >= 1");
                          LDN_REQUIRE(c.p0 > 0.0, "vladbow config: p0 must be > 0");
                          LDN_REQUIRE(c.frame_dim >= 1, "vladbow config: frame_dim must be >= 1");
                          LDN_REQUIRE(c.scene_tau > 0.0 && c.scene_tau <= 2.0,
                                      "vladbow config: scene_tau must be in (0, 2]");
                          LDN_REQUIRE(c.head.fused_dim == c.clusters,
                                      "vladbow config: head not normalized");
                          validate_resnet(c.head, "vladbow head");
                        },
                        [](const FrameMixConfig& c) {
                          LDN_REQUIRE(c.combinations >= 1, "framemix config: combinations must be >= 1");
                          LDN_REQUIRE(c.t_max >= 1, "framemix config: t_max must be >= 1");
                          LDN_REQUIRE(c.frame_dim >= 1, "framemix config: frame_dim must be >= 1");
                          LDN_REQUIRE(c.head.fused_dim == c.combinations * c.frame_dim,
                                      "framemix config: head not normalized");
                          validate_resnet(c.head, "framemix head");
                        },
                        [](const LinearHeadConfig& c) {
                          LDN_REQUIRE(c.input_dim >= 1, "linear config: input_dim must be >= 1");
                          LDN_REQUIRE(c.vocabulary_size >= 1,
                                      "linear config: vocabulary_size must be >= 1");
                        }},
             config);
}

std::string canonical_text(const ModelConfig& config) {
  KeyWriter w;
  w.put("arch", architecture_tag(config));
  std::visit(Overloaded{[&](const ResNetLikeConfig& c) {
                          w.put("vocabulary_size", c.vocabulary_size);
                          w.put("video_dim", c.video_dim);
                          w.put("audio_dim", c.audio_dim);
                          w.put("fused_dim", c.fused_dim);
                          w.put("inner_size", c.inner_size);
                          w.put("av_id_block_num", c.av_id_block_num);
                          w.put("concat_id_block_num", c.concat_id_block_num);
                          w.put("dropout_rate", c.dropout_rate);
                          w.put("modality", kModalities[static_cast<std::size_t>(c.modality)]);
                          w.put("activation", kActivations[static_cast<std::size_t>(c.activation)]);
                          w.put("use_frame_stats", c.use_frame_stats);
                        },
                        [&](const VladBowConfig& c) {
                          w.put("vocabulary_size", c.head.vocabulary_size);
                          w.put("frame_dim", c.frame_dim);
                          w.put("clusters", c.clusters);
                          w.put("p0", c.p0);
                          w.put("frames", kFrameSources[static_cast<std::size_t>(c.frames)]);
                          w.put("scene_tau", c.scene_tau);
                          write_head(w, c.head);
                        },
                        [&](const FrameMixConfig& c) {
                          w.put("vocabulary_size", c.head.vocabulary_size);
                          w.put("frame_dim", c.frame_dim);
                          w.put("combinations", c.combinations);
                          w.put("t_max", c.t_max);
                          write_head(w, c.head);
                        },
                        [&](const LinearHeadConfig& c) {
                          w.put("vocabulary_size", c.vocabulary_size);
                          w.put("input_dim", c.input_dim);
                        }},
             config);
  w.put("penultimate", penultimate_layer(config));
  return w.text();
}

ModelConfig parse_model_config(const std::string& text, const ModelConfig* base) {
  KeyReader r(parse_key_values(text, "model config"), "model config");
  std::string arch = base ? architecture_tag(*base) : "resnet";
  r.read("arch", arch);
  ModelConfig config;
  if (base && architecture_tag(*base) == arch) {
    config = *base;
  } else if (arch == "resnet") {
    config = ResNetLikeConfig{};
  } else if (arch == "vladbow") {
    config = VladBowConfig{.head = default_head()};
  } else if (arch == "framemix") {
    config = FrameMixConfig{.head = default_head()};
  } else if (arch == "linear") {
    config = LinearHeadConfig{};
  } else {
    throw InputError("model config: unknown arch '" + arch + "'");
  }
  std::visit(Overloaded{[&](ResNetLikeConfig& c) {
                          r.read("vocabulary_size", c.vocabulary_size);
                          r.read("video_dim", c.video_dim);
                          r.read("audio_dim", c.audio_dim);
                          r.read("fused_dim", c.fused_dim);
                          r.read("inner_size", c.inner_size);
                          r.read("av_id_block_num", c.av_id_block_num);
                          r.read("concat_id_block_num", c.concat_id_block_num);
                          r.read("dropout_rate", c.dropout_rate);
                          std::size_t m = static_cast<std::size_t>(c.modality);
                          r.read_choice("modality", kModalities, m);
                          c.modality = static_cast<Modality>(m);
                          std::size_t a = static_cast<std::size_t>(c.activation);
                          r.read_choice("activation", kActivations, a);
                          c.activation = static_cast<Activation>(a);
                          r.read("use_frame_stats", c.use_frame_stats);
                        },
                        [&](VladBowConfig& c) {
                          r.read("vocabulary_size", c.head.vocabulary_size);
                          r.read("frame_dim", c.frame_dim);
                          r.read("clusters", c.clusters);
                          r.read("p0", c.p0);
                          std::size_t s = static_cast<std::size_t>(c.frames);
                          r.read_choice("frames", kFrameSources, s);
                          c.frames = static_cast<FrameSource>(s);
                          r.read("scene_tau", c.scene_tau);
                          read_head(r, c.head);
                        },
                        [&](FrameMixConfig& c) {
                          r.read("vocabulary_size", c.head.vocabulary_size);
                          r.read("frame_dim", c.frame_dim);
                          r.read("combinations", c.combinations);
                          r.read("t_max", c.t_max);
                          read_head(r, c.head);
                        },
                        [&](LinearHeadConfig& c) {
                          r.read("vocabulary_size", c.vocabulary_size);
                          r.read("input_dim", c.input_dim);
                        }},
             config);
  normalize(config);
  std::string penultimate = penultimate_layer(config);
  r.read("penultimate", penultimate);
  LDN_REQUIRE(penultimate == penultimate_layer(config),
              "model config: penultimate layer '" + penultimate + "' does not exist in arch " + arch);
  r.finish();
  return config;
}

void bind_dims(ModelConfig& config, std::uint32_t vocab, std::uint32_t video_dim,
               std::uint32_t audio_dim) {
  auto set = [](std::uint32_t& field, std::uint32_t value, const char* name) {
    LDN_REQUIRE(field == 0 || field == value,
                std::string("model config: ") + name + " = " + std::to_string(field) +
                    " but the data has " + std::to_string(value));
    field = value;
  };
  std::visit(Overloaded{[&](ResNetLikeConfig& c) {
                          set(c.vocabulary_size, vocab, "vocabulary_size");
                          if (c.modality != Modality::kFused) {
                            set(c.video_dim, video_dim, "video_dim");
                            set(c.audio_dim, audio_dim, "audio_dim");
                          }
                        },
                        [&](VladBowConfig& c) {
                          set(c.head.vocabulary_size, vocab, "vocabulary_size");
                          set(c.frame_dim, video_dim + audio_dim, "frame_dim");
                        },
                        [&](FrameMixConfig& c) {
                          set(c.head.vocabulary_size, vocab, "vocabulary_size");
                          set(c.frame_dim, video_dim + audio_dim, "frame_dim");
                        },
                        [&](LinearHeadConfig& c) { set(c.vocabulary_size, vocab, "vocabulary_size"); }},
             config);
  normalize(config);
}

std::string penultimate_layer(const ModelConfig& config) {
  return std::holds_alternative<LinearHeadConfig>(config) ? "input" : "concat_output";
}

std::uint32_t penultimate_width(const ModelConfig& config) {
  return std::visit(Overloaded{[](const ResNetLikeConfig& c) { return c.inner_size; },
                               [](const VladBowConfig& c) { return c.head.inner_size; },
                               [](const FrameMixConfig& c) { return c.head.inner_size; },
                               [](const LinearHeadConfig& c) { return c.input_dim; }},
                    config);
}

bool needs_frames(const ModelConfig& config) {
  if (const auto* r = std::get_if<ResNetLikeConfig>(&config)) return r->use_frame_stats;
  return std::holds_alternative<VladBowConfig>(config) ||
         std::holds_alternative<FrameMixConfig>(config);
}

}  // namespace ldn::models
