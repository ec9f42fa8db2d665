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

#ifndef LDN_DATAIO_DATASET_HPP_
#define LDN_DATAIO_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldn/diffcore/tensor.hpp"

namespace ldn::data {

// Sorted, duplicate-free label indices.
using LabelSet = std::vector<std::uint32_t>;

struct VideoRecord {
  std::string id;
  std::vector<double> video;
  std::vector<double> audio;
  // T x (video_dim + audio_dim); video columns first.
  std::optional<diff::Tensor> frames;
  LabelSet noisy_labels;
  std::optional<LabelSet> clean_labels;

  friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

struct Dataset {
  std::uint32_t vocabulary_size = 0;
  std::uint32_t video_dim = 0;
  std::uint32_t audio_dim = 0;
  std::vector<VideoRecord> records;
  // Optional label -> group ("vertical") names; not part of the binary file.
  std::map<std::uint32_t, std::string> groups;

  std::uint32_t frame_dim() const { return video_dim + audio_dim; }
  bool has_frames() const;
  bool has_clean_labels() const;
  // Throws InputError on any broken invariant (duplicate ids, dims, label
  // range, mixed frame presence, non-finite features).
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Binary "LDNS" v1 container. Features are stored as little-endian f32;
// in-memory values that are not f32-representable are rounded on write.
std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

// Group map text: one "label_index<TAB>group_name" line per label.
void write_group_map(const std::filesystem::path& path,
                     const std::map<std::uint32_t, std::string>& groups);
std::map<std::uint32_t, std::string> read_group_map(
    const std::filesystem::path& path);

// Normalizes a label list in place (sort, dedupe).
void canonicalize(LabelSet& labels);

// Dense [N x vocabulary] 0/1 matrix of noisy (or clean) labels.
diff::Tensor label_matrix(const Dataset& dataset, bool clean = false);

// Reads a whole file; missing file is an InputError.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

}  // namespace ldn::data

#endif  // LDN_DATAIO_DATASET_HPP_
