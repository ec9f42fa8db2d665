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

#ifndef LDN_LOSSMETRICS_LOSSES_HPP_
#define LDN_LOSSMETRICS_LOSSES_HPP_

#include <cstddef>

#include "ldn/diffcore/graph.hpp"
#include "ldn/diffcore/tensor.hpp"

namespace ldn::loss {

using diff::Graph;
using diff::Tensor;
using diff::Var;

inline constexpr double kBceClamp = 1e-7;

// -mean(t ln p + (1 - t) ln(1 - p)) with p clamped to [1e-7, 1 - 1e-7].
// Targets may be soft.
Var bce(Graph& g, Var probabilities, const Tensor& targets);
double bce(const Tensor& probabilities, const Tensor& targets);

enum class PairScope { kBatch, kPerSample };

struct RankOptions {
  std::size_t top_k_neg = 30;
  PairScope scope = PairScope::kBatch;
  double margin = 1.0;  // hinge only
};

// Pairs every positive with the top_k_neg highest-scored negatives of each
// sample (pooled over the batch, or within the sample for kPerSample) and
// averages ln(1 + exp(n - p + 1)) over the pairs. labels is 0/1.
Var soft_rank_loss(Graph& g, Var scores, const Tensor& labels, const RankOptions& options = {});
// Same pairing, mean of max(0, margin - (p - n)).
Var hinge_rank_loss(Graph& g, Var scores, const Tensor& labels, const RankOptions& options = {});

double soft_rank_loss(const Tensor& scores, const Tensor& labels, const RankOptions& options = {});
double hinge_rank_loss(const Tensor& scores, const Tensor& labels, const RankOptions& options = {});

}  // namespace ldn::loss

#endif  // LDN_LOSSMETRICS_LOSSES_HPP_
