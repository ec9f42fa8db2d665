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

#include "ldn/models/features.hpp"

#include <algorithm>

#include "ldn/error.hpp"
#include "ldn/framefeat/framefeat.hpp"

namespace ldn::models {

using diff::Shape;
using diff::Tensor;

namespace {

Tensor gather_rows(const Tensor& m, std::span<const std::size_t> rows) {
  if (m.empty()) return {};
  Shape shape = m.shape();
  const std::size_t stride = m.size() / shape[0];
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(m.data().begin() + static_cast<std::ptrdiff_t>(rows[i] * stride), stride,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

Tensor frames_of(const data::VideoRecord& r) {
  LDN_REQUIRE(r.frames.has_value(), "record '" + r.id + "' has no frames but the model needs them");
  return *r.frames;
}

}  // namespace

FeatureTable prepare_features(const data::Dataset& ds, const ModelConfig& config) {
  LDN_REQUIRE(!ds.records.empty(), "prepare_features: empty dataset");
  const std::size_t n = ds.records.size();
  FeatureTable t;
  for (const auto& r : ds.records) t.ids.push_back(r.id);

  if (const auto* c = std::get_if<ResNetLikeConfig>(&config)) {
    LDN_REQUIRE(c->modality != Modality::kFused, "prepare_features: fused models read feature matrices");
    LDN_REQUIRE(c->video_dim == ds.video_dim && c->audio_dim == ds.audio_dim,
                "model dims do not match the dataset");
    t.video = Tensor({n, ds.video_dim});
    t.audio = Tensor({n, ds.audio_dim});
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(ds.records[i].video.begin(), ds.records[i].video.end(), t.video.row(i).begin());
      std::copy(ds.records[i].audio.begin(), ds.records[i].audio.end(), t.audio.row(i).begin());
    }
    if (c->use_frame_stats) {
      t.stats = Tensor({n, c->stats_dim()});
      for (std::size_t i = 0; i < n; ++i) {
        const auto flat = frame::frame_statistics(frames_of(ds.records[i])).flatten();
        std::copy(flat.begin(), flat.end(), t.stats.row(i).begin());
      }
    }
  } else if (const auto* v = std::get_if<VladBowConfig>(&config)) {
    LDN_REQUIRE(v->frame_dim == ds.frame_dim(), "vladbow frame_dim does not match the dataset");
    for (const auto& r : ds.records) {
      Tensor f = frames_of(r);
      if (v->frames == FrameSource::kScenes) {
        f = frame::scene_representatives(f, frame::segment_scenes(f, v->scene_tau));
      }
      t.frame_rows.push_back(std::move(f));
    }
  } else if (const auto* m = std::get_if<FrameMixConfig>(&config)) {
    LDN_REQUIRE(m->frame_dim == ds.frame_dim(), "framemix frame_dim does not match the dataset");
    t.padded = Tensor({n, m->t_max, m->frame_dim});
    const std::size_t stride = std::size_t{m->t_max} * m->frame_dim;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = frame::pad_truncate(frames_of(ds.records[i]), m->t_max);
      std::copy(p.frames.data().begin(), p.frames.data().end(),
                t.padded.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
  } else {
    throw InputError("prepare_features: the linear head reads feature matrices");
  }
  return t;
}

FeatureTable dense_features(std::vector<std::string> ids, Tensor features) {
  LDN_REQUIRE(features.rank() == 2 && features.dim(0) == ids.size(),
              "dense_features: rows must match ids");
  FeatureTable t;
  t.ids = std::move(ids);
  t.fused = std::move(features);
  return t;
}

Batch make_batch(const FeatureTable& t, std::span<const std::size_t> rows) {
  LDN_REQUIRE(!rows.empty(), "make_batch: empty batch");
  for (std::size_t r : rows) LDN_REQUIRE(r < t.rows(), "make_batch: row out of range");
  Batch b;
  b.size = rows.size();
  b.video = gather_rows(t.video, rows);
  b.audio = gather_rows(t.audio, rows);
  b.stats = gather_rows(t.stats, rows);
  b.fused = gather_rows(t.fused, rows);
  b.padded = gather_rows(t.padded, rows);
  if (!t.frame_rows.empty()) {
    std::size_t total = 0;
    b.frame_offsets.push_back(0);
    for (std::size_t r : rows) {
      total += t.frame_rows[r].dim(0);
      b.frame_offsets.push_back(total);
    }
    const std::size_t d = t.frame_rows[rows[0]].dim(1);
    b.frames = Tensor({total, d});
    auto out = b.frames.data().begin();
    for (std::size_t r : rows) out = std::copy(t.frame_rows[r].data().begin(), t.frame_rows[r].data().end(), out);
  }
  return b;
}

}  // namespace ldn::models
