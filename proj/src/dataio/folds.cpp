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

#include "ldn/dataio/folds.hpp"

#include <fstream>
#include <numeric>

#include "ldn/error.hpp"
#include "ldn/random.hpp"

namespace ldn::data {

std::vector<std::size_t> FoldSplit::members(std::uint32_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldSplit::complement(std::uint32_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(i);
  return out;
}

void FoldSplit::check_matches(const Dataset& dataset) const {
  LDN_REQUIRE(k >= 2, "folds: k must be >= 2");
  LDN_REQUIRE(ids.size() == dataset.records.size() && fold.size() == ids.size(),
              "folds: split covers " + std::to_string(ids.size()) +
                  " records, dataset has " + std::to_string(dataset.records.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LDN_REQUIRE(ids[i] == dataset.records[i].id,
                "folds: record " + std::to_string(i) + " is '" + ids[i] +
                    "' but dataset has '" + dataset.records[i].id + "'");
    LDN_REQUIRE(fold[i] < k, "folds: fold index out of range");
  }
}

FoldSplit make_folds(const std::vector<std::string>& ids, std::uint32_t k,
                     std::uint64_t seed) {
  LDN_REQUIRE(k >= 2, "make_folds: k must be >= 2");
  LDN_REQUIRE(ids.size() >= k, "make_folds: k=" + std::to_string(k) +
                                   " exceeds record count " +
                                   std::to_string(ids.size()));
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::derive(seed, "folds"));
  rng.shuffle(std::span<std::size_t>(order));
  FoldSplit split;
  split.k = k;
  split.ids = ids;
  split.fold.assign(ids.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    split.fold[order[i]] = static_cast<std::uint32_t>(i % k);
  }
  return split;
}

FoldSplit make_folds(const Dataset& dataset, std::uint32_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(dataset.records.size());
  for (const VideoRecord& r : dataset.records) ids.push_back(r.id);
  return make_folds(ids, k, seed);
}

void write_folds(const std::filesystem::path& path, const FoldSplit& folds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "k\t" << folds.k << '\n';
  for (std::size_t i = 0; i < folds.ids.size(); ++i) {
    out << folds.ids[i] << '\t' << folds.fold[i] << '\n';
  }
}

FoldSplit read_folds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  FoldSplit split;
  std::string line;
  std::size_t line_no = 0;
  auto parse_uint = [&](const std::string& s) -> std::uint32_t {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || v > 0xFFFFFFFFul) {
      throw FormatError("folds line " + std::to_string(line_no) +
                        ": expected an unsigned integer, got '" + s + "'");
    }
    return static_cast<std::uint32_t>(v);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("folds line " + std::to_string(line_no) + ": missing tab");
    }
    const std::string key = line.substr(0, tab);
    const std::uint32_t value = parse_uint(line.substr(tab + 1));
    if (line_no == 1) {
      if (key != "k") throw FormatError("folds line 1: expected 'k<TAB>count'");
      split.k = value;
      continue;
    }
    if (value >= split.k) {
      throw FormatError("folds line " + std::to_string(line_no) +
                        ": fold index out of range");
    }
    split.ids.push_back(key);
    split.fold.push_back(value);
  }
  if (line_no == 0) throw FormatError("folds: empty file");
  return split;
}

}  // namespace ldn::data
