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

#ifndef LDN_DATAIO_FOLDS_HPP_
#define LDN_DATAIO_FOLDS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldn/dataio/dataset.hpp"

namespace ldn::data {

// Fold index per record, aligned with the dataset's record order.
struct FoldSplit {
  std::uint32_t k = 0;
  std::vector<std::string> ids;
  std::vector<std::uint32_t> fold;

  std::vector<std::size_t> members(std::uint32_t f) const;
  std::vector<std::size_t> complement(std::uint32_t f) const;
  // Throws InputError unless the split covers exactly the dataset's ids in
  // order and every fold index is < k.
  void check_matches(const Dataset& dataset) const;

  friend bool operator==(const FoldSplit&, const FoldSplit&) = default;
};

// Seeded Fisher-Yates shuffle of record positions, then round-robin
// assignment, so fold sizes differ by at most one.
FoldSplit make_folds(const Dataset& dataset, std::uint32_t k, std::uint64_t seed);
FoldSplit make_folds(const std::vector<std::string>& ids, std::uint32_t k,
                     std::uint64_t seed);

// Text form: first line "k<TAB><k>", then one "id<TAB>fold" line per record.
void write_folds(const std::filesystem::path& path, const FoldSplit& folds);
FoldSplit read_folds(const std::filesystem::path& path);

}  // namespace ldn::data

#endif  // LDN_DATAIO_FOLDS_HPP_
