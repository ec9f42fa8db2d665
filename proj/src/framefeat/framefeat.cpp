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

#include "ldn/framefeat/framefeat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ldn/error.hpp"
#include "ldn/random.hpp"

namespace ldn::frame {

namespace {

void require_frames(const Tensor& frames, const char* op) {
  LDN_REQUIRE(frames.rank() == 2 && frames.dim(0) >= 1,
              std::string(op) + ": expected a non-empty [T x D] frame matrix");
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<double> FrameStats::flatten() const {
  std::vector<double> out;
  out.reserve(mean.size() * 6 + 1);
  for (const auto* part : {&mean, &stddev, &median, &min, &max, &mode}) {
    out.insert(out.end(), part->begin(), part->end());
  }
  out.push_back(static_cast<double>(length));
  return out;
}

FrameStats frame_statistics(const Tensor& frames) {
  require_frames(frames, "frame_statistics");
  const std::size_t t = frames.dim(0), d = frames.dim(1);
  FrameStats s;
  s.length = t;
  s.mean.resize(d);
  s.stddev.resize(d);
  s.median.resize(d);
  s.min.resize(d);
  s.max.resize(d);
  s.mode.resize(d);
  std::vector<double> column(t);
  std::map<long long, std::size_t> counts;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      column[i] = frames.at(i, j);
      sum += column[i];
    }
    const double mean = sum / static_cast<double>(t);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    s.mean[j] = mean;
    s.stddev[j] = std::sqrt(ss / static_cast<double>(t));

    counts.clear();
    for (double v : column) ++counts[std::llround(v * kModeLevels)];
    long long best = counts.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [q, c] : counts) {  // ascending q: strict > keeps the smaller
      if (c > best_count) {
        best = q;
        best_count = c;
      }
    }
    s.mode[j] = static_cast<double>(best) / kModeLevels;

    std::sort(column.begin(), column.end());
    s.min[j] = column.front();
    s.max[j] = column.back();
    s.median[j] = column[(t - 1) / 2];
  }
  return s;
}

Tensor center_frames(const Tensor& frames) {
  require_frames(frames, "center_frames");
  const std::size_t t = frames.dim(0), d = frames.dim(1);
  Tensor out = frames;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) sum += frames.at(i, j);
    const double mean = sum / static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i) out.at(i, j) -= mean;
  }
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

SceneSegmentation segment_scenes(const Tensor& frames, double tau) {
  require_frames(frames, "segment_scenes");
  LDN_REQUIRE(tau > 0.0 && tau <= 2.0, "segment_scenes: tau must be in (0, 2]");
  SceneSegmentation seg;
  seg.threshold = tau;
  seg.boundaries.push_back(0);
  for (std::size_t t = 1; t < frames.dim(0); ++t) {
    if (cosine_distance(frames.row(t - 1), frames.row(t)) > tau) seg.boundaries.push_back(t);
  }
  return seg;
}

Tensor scene_representatives(const Tensor& frames, const SceneSegmentation& seg,
                             SceneRepresentative rep) {
  require_frames(frames, "scene_representatives");
  LDN_REQUIRE(!seg.boundaries.empty() && seg.boundaries.front() == 0,
              "scene_representatives: segmentation must start at frame 0");
  const std::size_t t = frames.dim(0), d = frames.dim(1), n = seg.boundaries.size();
  Tensor out({n, d});
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t begin = seg.boundaries[s];
    const std::size_t end = s + 1 < n ? seg.boundaries[s + 1] : t;
    LDN_REQUIRE(begin < end && end <= t, "scene_representatives: bad boundaries");
    if (rep == SceneRepresentative::kFirst) {
      std::copy(frames.row(begin).begin(), frames.row(begin).end(), out.row(s).begin());
      continue;
    }
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < d; ++j) out.at(s, j) += frames.at(i, j);
    for (std::size_t j = 0; j < d; ++j) out.at(s, j) /= static_cast<double>(end - begin);
  }
  return out;
}

std::size_t nearest_centroid(std::span<const double> x, const Tensor& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.dim(0); ++c) {
    const double dd = squared_distance(x, centroids.row(c));
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  return best;
}

CentroidVocabulary kmeans_fit(const Tensor& vectors, std::size_t k, std::size_t max_iter,
                              double tol, std::uint64_t seed) {
  LDN_REQUIRE(vectors.rank() == 2, "kmeans_fit: expected an [N x D] matrix");
  const std::size_t n = vectors.dim(0), d = vectors.dim(1);
  LDN_REQUIRE(k >= 1, "kmeans_fit: k must be >= 1");
  LDN_REQUIRE(n >= k, "kmeans_fit: k=" + std::to_string(k) + " exceeds point count " +
                          std::to_string(n));
  LDN_REQUIRE(vectors.all_finite(), "kmeans_fit: non-finite input");
  Rng rng(Rng::derive(seed, "kmeans"));

  // Greedy k-means++: several D^2-weighted candidates per step, keep the one
  // with the lowest resulting potential.
  Tensor centroids({k, d});
  std::vector<double> d2(n);
  const std::size_t first = static_cast<std::size_t>(rng.uniform_int(n));
  std::copy(vectors.row(first).begin(), vectors.row(first).end(), centroids.row(0).begin());
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(vectors.row(i), centroids.row(0));
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> cand_d2(n), best_d2(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = static_cast<std::size_t>(rng.uniform_int(n));
      best_d2 = d2;
    } else {
      double best_potential = std::numeric_limits<double>::infinity();
      for (std::size_t trial = 0; trial < trials; ++trial) {
        double target = rng.uniform() * total, acc = 0.0;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          acc += d2[i];
          pick = i;  // last positive index if rounding leaves acc short
          if (acc > target) break;
        }
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          cand_d2[i] = std::min(d2[i], squared_distance(vectors.row(i), vectors.row(pick)));
          potential += cand_d2[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          chosen = pick;
          best_d2.swap(cand_d2);
        }
      }
    }
    std::copy(vectors.row(chosen).begin(), vectors.row(chosen).end(), centroids.row(c).begin());
    d2 = best_d2;
  }

  CentroidVocabulary vocab;
  std::vector<std::size_t> assign(n), counts(k);
  std::vector<double> dist(n);
  Tensor sums({k, d});
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::fill(counts.begin(), counts.end(), 0);
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest_centroid(vectors.row(i), centroids);
      dist[i] = squared_distance(vectors.row(i), centroids.row(assign[i]));
      inertia += dist[i];
      ++counts[assign[i]];
    }
    vocab.inertia_history.push_back(inertia);
    vocab.inertia = inertia;
    vocab.iterations = iter + 1;

    // Re-seed empty clusters at the farthest point of a cluster that can
    // spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) break;
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
      dist[far] = 0.0;
    }

    sums.fill(0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) sums.at(assign[i], j) += vectors.at(i, j);
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      double shift = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double v = sums.at(c, j) / static_cast<double>(counts[c]);
        shift += (v - centroids.at(c, j)) * (v - centroids.at(c, j));
        centroids.at(c, j) = v;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    if (max_shift < tol) break;
  }
  vocab.centroids = std::move(centroids);
  return vocab;
}

std::vector<std::size_t> unique_centroid_indices(const Tensor& frames,
                                                 const CentroidVocabulary& vocab) {
  require_frames(frames, "unique_centroid_subsample");
  LDN_REQUIRE(vocab.centroids.rank() == 2 && vocab.centroids.dim(1) == frames.dim(1),
              "unique_centroid_subsample: centroid dim " +
                  std::to_string(vocab.centroids.rank() == 2 ? vocab.centroids.dim(1) : 0) +
                  " does not match frame dim " + std::to_string(frames.dim(1)));
  std::vector<bool> seen(vocab.centroids.dim(0), false);
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < frames.dim(0); ++t) {
    const std::size_t c = nearest_centroid(frames.row(t), vocab.centroids);
    if (!seen[c]) {
      seen[c] = true;
      keep.push_back(t);
    }
  }
  return keep;
}

Tensor unique_centroid_subsample(const Tensor& frames, const CentroidVocabulary& vocab) {
  const auto keep = unique_centroid_indices(frames, vocab);
  return select_rows(frames, keep);
}

PaddedFrames pad_truncate(const Tensor& frames, std::size_t t_max) {
  require_frames(frames, "pad_truncate");
  LDN_REQUIRE(t_max >= 1, "pad_truncate: T_max must be >= 1");
  const std::size_t d = frames.dim(1), keep = std::min(frames.dim(0), t_max);
  PaddedFrames out{Tensor({t_max, d}), keep};
  std::copy_n(frames.data().begin(), keep * d, out.frames.data().begin());
  return out;
}

Tensor select_rows(const Tensor& m, std::span<const std::size_t> rows) {
  LDN_REQUIRE(m.rank() == 2 && !rows.empty(), "select_rows: need a matrix and rows");
  Tensor out({rows.size(), m.dim(1)});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LDN_REQUIRE(rows[i] < m.dim(0), "select_rows: row out of range");
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace ldn::frame
