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

#include "ldn/dataio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ldn/error.hpp"

namespace ldn::data {

namespace {

using Vec = std::vector<double>;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void normalize(Vec& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0)
    for (double& x : v) x /= n;
}

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  normalize(v);
  return v;
}

double cosine_distance(const Vec& a, const Vec& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

// Draws `count` distinct labels with probability proportional to weight.
LabelSet sample_labels(Rng& rng, std::vector<double> weights, std::uint32_t count) {
  LabelSet out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = rng.uniform() * total;
    std::size_t pick = weights.size() - 1;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l] <= 0.0) continue;
      if (u < weights[l]) {
        pick = l;
        break;
      }
      u -= weights[l];
    }
    while (weights[pick] <= 0.0) --pick;  // guard against rounding at the tail
    out.push_back(static_cast<std::uint32_t>(pick));
    weights[pick] = 0.0;
  }
  canonicalize(out);
  return out;
}

Vec label_signal(const std::vector<Vec>& prototypes, const LabelSet& labels) {
  Vec s(prototypes.front().size(), 0.0);
  for (std::uint32_t l : labels)
    for (std::size_t d = 0; d < s.size(); ++d) s[d] += prototypes[l][d];
  normalize(s);
  return s;
}

void check_config(const GeneratorConfig& c, const NoiseConfig& noise) {
  LDN_REQUIRE(c.vocabulary_size >= 2, "generator: vocabulary_size must be >= 2");
  LDN_REQUIRE(c.num_videos >= 1, "generator: need at least one video");
  LDN_REQUIRE(c.video_dim >= 1 && c.audio_dim >= 1, "generator: dims must be >= 1");
  LDN_REQUIRE(c.min_labels >= 1 && c.min_labels <= c.max_labels,
              "generator: need 1 <= min_labels <= max_labels");
  LDN_REQUIRE(c.max_labels <= c.vocabulary_size,
              "generator: max_labels exceeds the vocabulary");
  LDN_REQUIRE(c.num_groups >= 1, "generator: num_groups must be >= 1");
  LDN_REQUIRE(c.video_noise >= 0 && c.audio_noise >= 0 && c.frame_noise >= 0,
              "generator: noise levels must be non-negative");
  LDN_REQUIRE(c.min_scenes >= 1 && c.min_scenes <= c.max_scenes,
              "generator: need 1 <= min_scenes <= max_scenes");
  LDN_REQUIRE(c.min_scene_length >= 1 && c.min_scene_length <= c.max_scene_length,
              "generator: need 1 <= min_scene_length <= max_scene_length");
  LDN_REQUIRE(c.scene_separation >= 0.0 && c.scene_separation < 1.0,
              "generator: scene_separation must be in [0, 1)");
  LDN_REQUIRE(noise.fn_rate >= 0.0 && noise.fn_rate <= 1.0,
              "noise: fn_rate must be in [0, 1]");
  LDN_REQUIRE(noise.fp_rate >= 0.0, "noise: fp_rate must be >= 0");
}

}  // namespace

LabelSet corrupt_labels(const LabelSet& clean, std::uint32_t vocabulary_size,
                        const NoiseConfig& noise, Rng& rng) {
  LabelSet noisy;
  for (std::uint32_t l : clean) {
    if (!rng.bernoulli(noise.fn_rate)) noisy.push_back(l);
  }
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t l = 0; l < vocabulary_size; ++l) {
    if (!std::binary_search(clean.begin(), clean.end(), l)) candidates.push_back(l);
  }
  const std::uint64_t extra = std::min<std::uint64_t>(rng.poisson(noise.fp_rate),
                                                      candidates.size());
  // Partial Fisher-Yates: the first `extra` slots become the sample.
  for (std::uint64_t k = 0; k < extra; ++k) {
    const std::size_t j = k + rng.uniform_int(candidates.size() - k);
    std::swap(candidates[k], candidates[j]);
    noisy.push_back(candidates[k]);
  }
  canonicalize(noisy);
  return noisy;
}

SyntheticData generate_synthetic(const GeneratorConfig& c,
                                 const NoiseConfig& noise, std::uint64_t seed) {
  check_config(c, noise);
  const std::size_t L = c.vocabulary_size;
  const std::size_t frame_dim = std::size_t{c.video_dim} + c.audio_dim;

  Rng proto_rng(Rng::derive(seed, "prototypes"));
  std::vector<Vec> video_protos, audio_protos;
  for (std::size_t l = 0; l < L; ++l) video_protos.push_back(random_unit(proto_rng, c.video_dim));
  for (std::size_t l = 0; l < L; ++l) audio_protos.push_back(random_unit(proto_rng, c.audio_dim));

  std::vector<double> popularity(L);
  for (std::size_t l = 0; l < L; ++l) {
    popularity[l] = 1.0 / std::pow(static_cast<double>(l + 1), c.label_skew);
  }

  SyntheticData out;
  Dataset& ds = out.dataset;
  ds.vocabulary_size = c.vocabulary_size;
  ds.video_dim = c.video_dim;
  ds.audio_dim = c.audio_dim;
  for (std::uint32_t l = 0; l < c.vocabulary_size; ++l) {
    const std::uint64_t g = std::uint64_t{l} * c.num_groups / c.vocabulary_size;
    ds.groups[l] = "vertical_" + std::to_string(g);
  }

  const std::uint64_t noise_seed = Rng::derive(seed, "noise", noise.seed);
  ds.records.reserve(c.num_videos);
  for (std::uint32_t i = 0; i < c.num_videos; ++i) {
    Rng rng(Rng::derive(seed, "video", i));
    VideoRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "vid%06u", i);
    rec.id = id;

    const auto count = static_cast<std::uint32_t>(
        c.min_labels + rng.uniform_int(c.max_labels - c.min_labels + 1));
    LabelSet clean = sample_labels(rng, popularity, count);

    const Vec vsig = label_signal(video_protos, clean);
    const Vec asig = label_signal(audio_protos, clean);
    rec.video.resize(c.video_dim);
    for (std::size_t d = 0; d < c.video_dim; ++d) {
      rec.video[d] = to_f32(vsig[d] + c.video_noise * rng.normal());
    }
    rec.audio.resize(c.audio_dim);
    for (std::size_t d = 0; d < c.audio_dim; ++d) {
      rec.audio[d] = to_f32(c.audio_informativeness * asig[d] + c.audio_noise * rng.normal());
    }

    if (c.with_frames) {
      Vec signal(frame_dim);
      for (std::size_t d = 0; d < c.video_dim; ++d) signal[d] = vsig[d];
      for (std::size_t d = 0; d < c.audio_dim; ++d) {
        signal[c.video_dim + d] = c.audio_informativeness * asig[d];
      }
      normalize(signal);
      const auto scenes = static_cast<std::uint32_t>(
          c.min_scenes + rng.uniform_int(c.max_scenes - c.min_scenes + 1));
      std::vector<Vec> centers;
      std::vector<std::uint32_t> lengths;
      for (std::uint32_t s = 0; s < scenes; ++s) {
        Vec center;
        for (int attempt = 0;; ++attempt) {
          LDN_REQUIRE(attempt < 10000,
                      "generator: cannot reach scene_separation; raise scene_spread");
          const Vec dir = random_unit(rng, frame_dim);
          center = signal;
          for (std::size_t d = 0; d < frame_dim; ++d) center[d] += c.scene_spread * dir[d];
          normalize(center);
          if (centers.empty() ||
              cosine_distance(centers.back(), center) > c.scene_separation) {
            break;
          }
        }
        centers.push_back(std::move(center));
        lengths.push_back(static_cast<std::uint32_t>(
            c.min_scene_length +
            rng.uniform_int(c.max_scene_length - c.min_scene_length + 1)));
      }
      const std::size_t total = std::accumulate(lengths.begin(), lengths.end(), std::size_t{0});
      diff::Tensor frames({total, frame_dim});
      std::size_t t = 0;
      for (std::uint32_t s = 0; s < scenes; ++s) {
        for (std::uint32_t k = 0; k < lengths[s]; ++k, ++t) {
          for (std::size_t d = 0; d < frame_dim; ++d) {
            frames.at(t, d) = to_f32(centers[s][d] + c.frame_noise * rng.normal());
          }
        }
      }
      rec.frames = std::move(frames);
      out.planted_scenes.push_back(scenes);
    }

    Rng noise_rng(Rng::derive(noise_seed, "record", i));
    rec.noisy_labels = corrupt_labels(clean, c.vocabulary_size, noise, noise_rng);
    rec.clean_labels = std::move(clean);
    ds.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace ldn::data
