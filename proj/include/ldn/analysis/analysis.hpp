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

#ifndef LDN_ANALYSIS_ANALYSIS_HPP_
#define LDN_ANALYSIS_ANALYSIS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldn/dataio/predictions.hpp"
#include "ldn/lossmetrics/metrics.hpp"

namespace ldn::analysis {

enum class ErrorClass { kTruePositive, kFalsePositive, kFalseNegative };
const char* class_name(ErrorClass c);

struct LabelCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

struct ErrorTaxonomy {
  // video id -> label -> class; unclassified pairs are absent.
  std::map<std::string, std::map<std::uint32_t, ErrorClass>> classes;
  std::vector<LabelCounts> per_label;  // indexed by label
};

// Positives: TP when the score beats every negative of the video, else FN.
// Negatives among the top_n: FP when the score beats at least one positive.
// All comparisons are strict. Each list holds the scores known for a video
// (its top-n at least); it must contain every positive of that video, and
// negatives missing from it are taken to rank below the list.
ErrorTaxonomy error_taxonomy(const std::vector<data::PredictionList>& predictions,
                             const loss::GroundTruth& truth, std::uint32_t vocabulary_size,
                             std::size_t top_n = 20);
// Full score rows [ids x vocabulary].
ErrorTaxonomy error_taxonomy(const diff::Tensor& scores, const std::vector<std::string>& ids,
                             const loss::GroundTruth& truth, std::size_t top_n = 20);

struct LabelReport {
  std::uint32_t label = 0;
  LabelCounts counts;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_undefined = false;  // TP + FP == 0
  bool recall_undefined = false;     // TP + FN == 0
  std::uint64_t train_count = 0;
  // Frequency bucket b holds counts in [2^b, 2^(b+1)); -1 holds count 0.
  int bucket = -1;
};

int frequency_bucket(std::uint64_t count);

std::vector<LabelReport> per_label_report(const ErrorTaxonomy& taxonomy,
                                          const std::vector<std::uint64_t>& train_counts);

struct GroupAccuracy {
  std::string group;
  double mean_f1 = 0.0;  // unweighted over the group's labels
  std::size_t labels = 0;
  std::uint64_t positives = 0;  // TP + FN over the group's labels
};

// Labels without a group go to "unknown"; groups without labels are omitted.
std::vector<GroupAccuracy> group_accuracy(const std::vector<LabelReport>& report,
                                          const std::map<std::uint32_t, std::string>& groups);

// bins x bins label counts; cell (i, j) holds precision bin i, recall bin j,
// with value 1 in the last bin.
std::vector<std::vector<std::uint64_t>> precision_recall_heatmap(
    const std::vector<LabelReport>& report, std::size_t bins = 10);

struct CountBucketRow {
  int bucket = -1;
  std::uint64_t lo = 0, hi = 0;  // inclusive count range
  std::size_t labels = 0;
  double mean_f1 = 0.0;
};
std::vector<CountBucketRow> f1_by_count(const std::vector<LabelReport>& report);

// Label occurrences in a dataset's noisy (or clean) labels.
std::vector<std::uint64_t> label_counts(const data::Dataset& dataset, bool clean = false);

// analysis.json, heatmap.tsv, f1_by_count.tsv, groups.tsv.
void write_analysis(const std::filesystem::path& dir, const std::vector<LabelReport>& report,
                    const std::map<std::uint32_t, std::string>& groups);

}  // namespace ldn::analysis

#endif  // LDN_ANALYSIS_ANALYSIS_HPP_
