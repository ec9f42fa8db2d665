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

#ifndef LDN_DATAIO_PREDICTIONS_HPP_
#define LDN_DATAIO_PREDICTIONS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldn/diffcore/tensor.hpp"

namespace ldn::data {

struct ScoredLabel {
  std::uint32_t label = 0;
  double score = 0.0;
  friend bool operator==(const ScoredLabel&, const ScoredLabel&) = default;
};

// One video's ranked labels, scores descending, labels unique.
struct PredictionList {
  std::string video_id;
  std::vector<ScoredLabel> entries;
  friend bool operator==(const PredictionList&, const PredictionList&) = default;
};

// Top-n labels of one score row; equal scores rank the lower label first.
PredictionList top_n(const std::string& video_id, std::span<const double> scores,
                     std::size_t n);
// Row-wise top_n over an [N x L] score matrix.
std::vector<PredictionList> top_n(const std::vector<std::string>& ids,
                                  const diff::Tensor& scores, std::size_t n);

// Throws InputError for unsorted lists, duplicate labels or non-finite scores.
void validate(const PredictionList& list);

// Rounds to what the text format stores (9 significant digits).
double round_to_stored(double score);
std::string format_score(double score);

// Line format: id<TAB>label:score,label:score,...
std::string encode_predictions(const std::vector<PredictionList>& predictions);
std::vector<PredictionList> decode_predictions(const std::string& text);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionList>& predictions);
std::vector<PredictionList> read_predictions(const std::filesystem::path& path);

// Dense [ids.size() x vocabulary] matrix from prediction lists; labels a
// list does not mention get `missing`. Every id must appear exactly once.
diff::Tensor predictions_to_matrix(const std::vector<PredictionList>& predictions,
                                   const std::vector<std::string>& ids,
                                   std::uint32_t vocabulary_size,
                                   double missing = 0.0);

}  // namespace ldn::data

#endif  // LDN_DATAIO_PREDICTIONS_HPP_
