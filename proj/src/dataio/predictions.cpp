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

#include "ldn/dataio/predictions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ldn/dataio/dataset.hpp"
#include "ldn/error.hpp"

namespace ldn::data {

PredictionList top_n(const std::string& video_id, std::span<const double> scores,
                     std::size_t n) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t keep = std::min(n, order.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end(), better);
  PredictionList list{video_id, {}};
  list.entries.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) list.entries.push_back({order[i], scores[order[i]]});
  return list;
}

std::vector<PredictionList> top_n(const std::vector<std::string>& ids,
                                  const diff::Tensor& scores, std::size_t n) {
  LDN_REQUIRE(scores.rank() == 2 && scores.dim(0) == ids.size(),
              "top_n: score matrix rows must match ids");
  std::vector<PredictionList> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back(top_n(ids[i], scores.row(i), n));
  return out;
}

void validate(const PredictionList& list) {
  std::unordered_set<std::uint32_t> labels;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const ScoredLabel& e = list.entries[i];
    LDN_REQUIRE(std::isfinite(e.score),
                "predictions for '" + list.video_id + "': non-finite score");
    LDN_REQUIRE(labels.insert(e.label).second,
                "predictions for '" + list.video_id + "': duplicate label " +
                    std::to_string(e.label));
    LDN_REQUIRE(i == 0 || list.entries[i - 1].score >= e.score,
                "predictions for '" + list.video_id + "': scores not sorted descending");
  }
}

std::string format_score(double score) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", score);
  return buf;
}

double round_to_stored(double score) { return std::strtod(format_score(score).c_str(), nullptr); }

std::string encode_predictions(const std::vector<PredictionList>& predictions) {
  std::string out;
  for (const PredictionList& p : predictions) {
    validate(p);
    LDN_REQUIRE(!p.video_id.empty() &&
                    p.video_id.find_first_of("\t\n\r") == std::string::npos,
                "predictions: invalid video id '" + p.video_id + "'");
    out += p.video_id;
    out += '\t';
    for (std::size_t i = 0; i < p.entries.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(p.entries[i].label);
      out += ':';
      out += format_score(p.entries[i].score);
    }
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void bad_line(std::size_t line_no, const std::string& why) {
  throw FormatError("predictions line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

std::vector<PredictionList> decode_predictions(const std::string& text) {
  std::vector<PredictionList> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) bad_line(line_no, "expected 'id<TAB>entries'");
    PredictionList list{line.substr(0, tab), {}};
    std::size_t p = tab + 1;
    while (p < line.size()) {
      std::size_t comma = line.find(',', p);
      if (comma == std::string::npos) comma = line.size();
      const std::string item = line.substr(p, comma - p);
      const auto colon = item.find(':');
      if (colon == std::string::npos) bad_line(line_no, "entry '" + item + "' lacks ':'");
      std::uint32_t label = 0;
      const char* lb = item.data();
      auto [lp, lec] = std::from_chars(lb, lb + colon, label);
      if (lec != std::errc() || lp != lb + colon || colon == 0) {
        bad_line(line_no, "bad label in '" + item + "'");
      }
      const std::string score_text = item.substr(colon + 1);
      char* score_end = nullptr;
      const double score = std::strtod(score_text.c_str(), &score_end);
      if (score_text.empty() || score_end != score_text.c_str() + score_text.size() ||
          !std::isfinite(score)) {
        bad_line(line_no, "bad score in '" + item + "'");
      }
      list.entries.push_back({label, score});
      p = comma + 1;
      if (comma == line.size()) break;
    }
    try {
      validate(list);
    } catch (const InputError& e) {
      bad_line(line_no, e.what());
    }
    out.push_back(std::move(list));
  }
  return out;
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<PredictionList>& predictions) {
  const std::string text = encode_predictions(predictions);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<PredictionList> read_predictions(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_predictions(std::string(bytes.begin(), bytes.end()));
}

diff::Tensor predictions_to_matrix(const std::vector<PredictionList>& predictions,
                                   const std::vector<std::string>& ids,
                                   std::uint32_t vocabulary_size, double missing) {
  LDN_REQUIRE(!ids.empty() && vocabulary_size > 0, "predictions_to_matrix: empty shape");
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = i;
  diff::Tensor m({ids.size(), vocabulary_size}, missing);
  std::vector<bool> seen(ids.size(), false);
  for (const PredictionList& p : predictions) {
    auto it = row_of.find(p.video_id);
    LDN_REQUIRE(it != row_of.end(), "predictions: unknown video '" + p.video_id + "'");
    LDN_REQUIRE(!seen[it->second], "predictions: duplicate video '" + p.video_id + "'");
    seen[it->second] = true;
    for (const ScoredLabel& e : p.entries) {
      LDN_REQUIRE(e.label < vocabulary_size, "predictions: label outside vocabulary");
      m.at(it->second, e.label) = e.score;
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LDN_REQUIRE(seen[i], "predictions: no entry for video '" + ids[i] + "'");
  }
  return m;
}

}  // namespace ldn::data
