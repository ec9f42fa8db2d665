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

#ifndef LDN_LOSSMETRICS_METRICS_HPP_
#define LDN_LOSSMETRICS_METRICS_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ldn/dataio/dataset.hpp"
#include "ldn/dataio/predictions.hpp"

namespace ldn::loss {

// video id -> positive labels.
using GroundTruth = std::map<std::string, data::LabelSet>;

GroundTruth ground_truth(const data::Dataset& dataset, bool clean = false);

// Pooled average precision over each video's top-n predictions: all kept
// (video, label, score) entries are sorted by score descending, ties by
// (video id, label) ascending, and sum_i precision(i) * rel(i) is divided by
// the number of positive pairs in truth. Lists longer than n are cut.
double gap_at_n(const std::vector<data::PredictionList>& predictions, const GroundTruth& truth,
                std::size_t n = 20);

// Same metric from a dense [N x L] score matrix whose rows follow ids.
double gap_at_n(const diff::Tensor& scores, const std::vector<std::string>& ids,
                const GroundTruth& truth, std::size_t n = 20);

}  // namespace ldn::loss

#endif  // LDN_LOSSMETRICS_METRICS_HPP_
