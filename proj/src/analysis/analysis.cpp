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

#include "ldn/analysis/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "ldn/error.hpp"

namespace ldn::analysis {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

std::size_t bin_of(double v, std::size_t bins) {
  return std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
}

}  // namespace

const char* class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::kTruePositive: return "TP";
    case ErrorClass::kFalsePositive: return "FP";
    case ErrorClass::kFalseNegative: return "FN";
  }
  return "?";
}

ErrorTaxonomy error_taxonomy(const std::vector<data::PredictionList>& predictions,
                             const loss::GroundTruth& truth, std::uint32_t vocabulary_size,
                             std::size_t top_n) {
  std::map<std::string, const data::PredictionList*> by_id;
  for (const auto& p : predictions) {
    LDN_REQUIRE(truth.count(p.video_id), "error_taxonomy: no truth for video '" + p.video_id + "'");
    LDN_REQUIRE(by_id.emplace(p.video_id, &p).second,
                "error_taxonomy: duplicate predictions for video '" + p.video_id + "'");
  }
  ErrorTaxonomy out;
  out.per_label.resize(vocabulary_size);
  for (const auto& [id, positives] : truth) {
    if (positives.empty()) continue;
    const auto it = by_id.find(id);
    LDN_REQUIRE(it != by_id.end(), "error_taxonomy: no scores for video '" + id + "'");
    const auto& entries = it->second->entries;
    std::map<std::uint32_t, double> score;
    for (const auto& e : entries) {
      LDN_REQUIRE(e.label < vocabulary_size, "error_taxonomy: label out of range");
      score[e.label] = e.score;
    }
    const std::set<std::uint32_t> pos(positives.begin(), positives.end());
    double max_negative = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries)
      if (!pos.count(e.label)) max_negative = std::max(max_negative, e.score);
    double min_positive = std::numeric_limits<double>::infinity();
    auto& classes = out.classes[id];
    for (std::uint32_t p : positives) {
      const auto s = score.find(p);
      LDN_REQUIRE(s != score.end(), "error_taxonomy: missing score for positive label " +
                                        std::to_string(p) + " of video '" + id + "'");
      LDN_REQUIRE(p < vocabulary_size, "error_taxonomy: label out of range");
      min_positive = std::min(min_positive, s->second);
      const bool tp = s->second > max_negative;
      classes[p] = tp ? ErrorClass::kTruePositive : ErrorClass::kFalseNegative;
      ++(tp ? out.per_label[p].tp : out.per_label[p].fn);
    }
    for (std::size_t i = 0; i < entries.size() && i < top_n; ++i) {
      const auto& e = entries[i];
      if (pos.count(e.label) || !(e.score > min_positive)) continue;
      classes[e.label] = ErrorClass::kFalsePositive;
      ++out.per_label[e.label].fp;
    }
  }
  return out;
}

ErrorTaxonomy error_taxonomy(const diff::Tensor& scores, const std::vector<std::string>& ids,
                             const loss::GroundTruth& truth, std::size_t top_n) {
  LDN_REQUIRE(scores.rank() == 2 && scores.dim(0) == ids.size(),
              "error_taxonomy: score rows must match ids");
  const auto vocab = static_cast<std::uint32_t>(scores.dim(1));
  return error_taxonomy(data::top_n(ids, scores, vocab), truth, vocab, top_n);
}

int frequency_bucket(std::uint64_t count) {
  if (count == 0) return -1;
  int b = 0;
  while (count >>= 1) ++b;
  return b;
}

std::vector<LabelReport> per_label_report(const ErrorTaxonomy& taxonomy,
                                          const std::vector<std::uint64_t>& train_counts) {
  LDN_REQUIRE(train_counts.size() == taxonomy.per_label.size(),
              "per_label_report: one training count per label required");
  std::vector<LabelReport> out;
  for (std::uint32_t l = 0; l < taxonomy.per_label.size(); ++l) {
    LabelReport r;
    r.label = l;
    r.counts = taxonomy.per_label[l];
    const auto& c = r.counts;
    r.precision_undefined = c.tp + c.fp == 0;
    r.recall_undefined = c.tp + c.fn == 0;
    if (!r.precision_undefined) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (!r.recall_undefined) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
    r.train_count = train_counts[l];
    r.bucket = frequency_bucket(r.train_count);
    out.push_back(r);
  }
  return out;
}

std::vector<GroupAccuracy> group_accuracy(const std::vector<LabelReport>& report,
                                          const std::map<std::uint32_t, std::string>& groups) {
  std::map<std::string, GroupAccuracy> acc;
  for (const auto& r : report) {
    const auto it = groups.find(r.label);
    const std::string name = it == groups.end() ? "unknown" : it->second;
    auto& g = acc[name];
    g.group = name;
    g.mean_f1 += r.f1;
    ++g.labels;
    g.positives += r.counts.tp + r.counts.fn;
  }
  std::vector<GroupAccuracy> out;
  for (auto& [name, g] : acc) {
    g.mean_f1 /= static_cast<double>(g.labels);
    out.push_back(g);
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> precision_recall_heatmap(
    const std::vector<LabelReport>& report, std::size_t bins) {
  LDN_REQUIRE(bins >= 1, "heatmap: bins must be >= 1");
  std::vector<std::vector<std::uint64_t>> grid(bins, std::vector<std::uint64_t>(bins, 0));
  for (const auto& r : report) ++grid[bin_of(r.precision, bins)][bin_of(r.recall, bins)];
  return grid;
}

std::vector<CountBucketRow> f1_by_count(const std::vector<LabelReport>& report) {
  std::map<int, CountBucketRow> rows;
  for (const auto& r : report) {
    auto& row = rows[r.bucket];
    row.bucket = r.bucket;
    row.lo = r.bucket < 0 ? 0 : std::uint64_t{1} << r.bucket;
    row.hi = r.bucket < 0 ? 0 : (std::uint64_t{2} << r.bucket) - 1;
    ++row.labels;
    row.mean_f1 += r.f1;
  }
  std::vector<CountBucketRow> out;
  for (auto& [b, row] : rows) {
    row.mean_f1 /= static_cast<double>(row.labels);
    out.push_back(row);
  }
  return out;
}

std::vector<std::uint64_t> label_counts(const data::Dataset& dataset, bool clean) {
  std::vector<std::uint64_t> counts(dataset.vocabulary_size, 0);
  for (const auto& r : dataset.records) {
    const auto& labels = clean ? r.clean_labels.value() : r.noisy_labels;
    for (std::uint32_t l : labels) ++counts.at(l);
  }
  return counts;
}

void write_analysis(const std::filesystem::path& dir, const std::vector<LabelReport>& report,
                    const std::map<std::uint32_t, std::string>& groups) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (const auto& r : report) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["tp"] = r.counts.tp;
    j["fp"] = r.counts.fp;
    j["fn"] = r.counts.fn;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["precision_undefined"] = r.precision_undefined;
    j["recall_undefined"] = r.recall_undefined;
    j["train_count"] = r.train_count;
    j["bucket"] = r.bucket;
    labels.push_back(j);
  }
  nlohmann::ordered_json doc;
  doc["labels"] = labels;
  write_text(dir / "analysis.json", doc.dump(2) + "\n");

  const std::size_t bins = 10;
  std::string heat = "precision_bin\\recall_bin";
  for (std::size_t j = 0; j < bins; ++j) heat += "\t" + std::to_string(j);
  heat += "\n";
  const auto grid = precision_recall_heatmap(report, bins);
  for (std::size_t i = 0; i < bins; ++i) {
    heat += std::to_string(i);
    for (std::uint64_t c : grid[i]) heat += "\t" + std::to_string(c);
    heat += "\n";
  }
  write_text(dir / "heatmap.tsv", heat);

  std::string f1 = "bucket\tmin_count\tmax_count\tlabels\tmean_f1\n";
  for (const auto& row : f1_by_count(report)) {
    f1 += std::to_string(row.bucket) + "\t" + std::to_string(row.lo) + "\t" +
          std::to_string(row.hi) + "\t" + std::to_string(row.labels) + "\t" +
          nlohmann::json(row.mean_f1).dump() + "\n";
  }
  write_text(dir / "f1_by_count.tsv", f1);

  std::string g = "group\tlabels\tpositives\tmean_f1\n";
  for (const auto& row : group_accuracy(report, groups)) {
    g += row.group + "\t" + std::to_string(row.labels) + "\t" + std::to_string(row.positives) +
         "\t" + nlohmann::json(row.mean_f1).dump() + "\n";
  }
  write_text(dir / "groups.tsv", g);
}

}  // namespace ldn::analysis
