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

#include "ldn/lossmetrics/metrics.hpp"

#include <algorithm>
#include <set>

#include "ldn/error.hpp"

namespace ldn::loss {

GroundTruth ground_truth(const data::Dataset& dataset, bool clean) {
  GroundTruth truth;
  for (const auto& r : dataset.records) {
    if (clean) {
      LDN_REQUIRE(r.clean_labels.has_value(), "record '" + r.id + "' has no clean labels");
      truth[r.id] = *r.clean_labels;
    } else {
      truth[r.id] = r.noisy_labels;
    }
  }
  return truth;
}

double gap_at_n(const std::vector<data::PredictionList>& predictions, const GroundTruth& truth,
                std::size_t n) {
  std::size_t positives = 0;
  for (const auto& [id, labels] : truth) positives += labels.size();
  LDN_REQUIRE(positives > 0, "gap_at_n: ground truth has no positive pairs");

  // Video order for tie-breaking: ids ascending.
  std::vector<const std::string*> order;
  for (const auto& p : predictions) order.push_back(&p.video_id);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return *a < *b; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    LDN_REQUIRE(*order[i - 1] != *order[i],
                "gap_at_n: duplicate predictions for video '" + *order[i] + "'");
  }

  struct Entry {
    double score;
    std::size_t video;  // rank of the video id
    std::uint32_t label;
    bool relevant;
  };
  std::vector<Entry> pool;
  for (const auto& p : predictions) {
    const std::size_t rank = static_cast<std::size_t>(
        std::lower_bound(order.begin(), order.end(), &p.video_id,
                         [](auto* a, auto* b) { return *a < *b; }) -
        order.begin());
    const auto it = truth.find(p.video_id);
    const data::LabelSet* pos = it == truth.end() ? nullptr : &it->second;
    std::set<std::uint32_t> seen;
    const std::size_t keep = std::min(n, p.entries.size());
    for (std::size_t i = 0; i < keep; ++i) {
      const auto& e = p.entries[i];
      LDN_REQUIRE(seen.insert(e.label).second, "gap_at_n: duplicate label " +
                                                   std::to_string(e.label) + " for video '" +
                                                   p.video_id + "'");
      const bool rel = pos && std::binary_search(pos->begin(), pos->end(), e.label);
      pool.push_back({e.score, rank, e.label, rel});
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.video != b.video) return a.video < b.video;
    return a.label < b.label;
  });
  double sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].relevant) continue;
    ++correct;
    sum += static_cast<double>(correct) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(positives);
}

double gap_at_n(const diff::Tensor& scores, const std::vector<std::string>& ids,
                const GroundTruth& truth, std::size_t n) {
  return gap_at_n(data::top_n(ids, scores, n), truth, n);
}

}  // namespace ldn::loss
