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

#include "ldn/lossmetrics/losses.hpp"

#include <algorithm>
#include <numeric>

#include "ldn/error.hpp"

namespace ldn::loss {

Var bce(Graph& g, Var probabilities, const Tensor& targets) {
  const Tensor& p = g.value(probabilities);
  LDN_REQUIRE(p.shape() == targets.shape(), "bce: prediction shape " + diff::shape_string(p.shape()) +
                                                " != target shape " +
                                                diff::shape_string(targets.shape()));
  Tensor complement = targets;
  for (double& v : complement.data()) {
    LDN_REQUIRE(v >= 0.0 && v <= 1.0, "bce: targets must lie in [0, 1]");
    v = 1.0 - v;
  }
  const Var pc = g.clamp(probabilities, kBceClamp, 1.0 - kBceClamp);
  const Var log_p = g.log(pc);
  const Var log_q = g.log(g.shift(g.scale(pc, -1.0), 1.0));
  const Var terms = g.add(g.mul(g.constant(targets), log_p), g.mul(g.constant(complement), log_q));
  return g.scale(g.mean_all(terms), -1.0);
}

double bce(const Tensor& probabilities, const Tensor& targets) {
  Graph g;
  return g.value(bce(g, g.input("p", probabilities), targets)).item();
}

namespace {

struct PairLists {
  std::vector<std::vector<std::size_t>> pos, neg;  // flat indices per sample
};

PairLists select_pairs(const Tensor& s, const Tensor& labels, std::size_t top_k) {
  LDN_REQUIRE(s.rank() == 2 && s.shape() == labels.shape(),
              "rank loss: scores and labels must be equal-shape matrices");
  LDN_REQUIRE(top_k >= 1, "rank loss: top_k_neg must be >= 1");
  const std::size_t b = s.dim(0), l = s.dim(1);
  PairLists out;
  out.pos.resize(b);
  out.neg.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<std::size_t> negs;
    for (std::size_t j = 0; j < l; ++j) {
      const double y = labels.at(i, j);
      LDN_REQUIRE(y == 0.0 || y == 1.0, "rank loss: labels must be hard 0/1");
      (y == 1.0 ? out.pos[i] : negs).push_back(i * l + j);
    }
    const std::size_t keep = std::min(top_k, negs.size());
    // Highest scores first; the lower label wins a tie.
    std::partial_sort(negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(keep), negs.end(),
                      [&](std::size_t a, std::size_t c) {
                        return s[a] > s[c] || (s[a] == s[c] && a < c);
                      });
    negs.resize(keep);
    std::sort(negs.begin(), negs.end());
    out.neg[i] = std::move(negs);
  }
  return out;
}

// pair(D) maps the [P x N] matrix of n - p differences to per-pair losses.
template <typename PairFn>
Var rank_loss(Graph& g, Var scores, const Tensor& labels, const RankOptions& o, PairFn pair) {
  const PairLists lists = select_pairs(g.value(scores), labels, o.top_k_neg);
  if (o.scope == PairScope::kBatch) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < lists.pos.size(); ++i) {
      pos.insert(pos.end(), lists.pos[i].begin(), lists.pos[i].end());
      neg.insert(neg.end(), lists.neg[i].begin(), lists.neg[i].end());
    }
    LDN_REQUIRE(!pos.empty() && !neg.empty(),
                "rank loss: the batch needs at least one positive and one negative");
    return g.mean_all(pair(g.pairwise_diff(g.gather(scores, pos), g.gather(scores, neg))));
  }
  Var total;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < lists.pos.size(); ++i) {
    if (lists.pos[i].empty() || lists.neg[i].empty()) continue;
    const Var s = g.sum_all(
        pair(g.pairwise_diff(g.gather(scores, lists.pos[i]), g.gather(scores, lists.neg[i]))));
    total = total.valid() ? g.add(total, s) : s;
    pairs += lists.pos[i].size() * lists.neg[i].size();
  }
  LDN_REQUIRE(pairs > 0, "rank loss: no sample has both a positive and a negative");
  return g.scale(total, 1.0 / static_cast<double>(pairs));
}

}  // namespace

Var soft_rank_loss(Graph& g, Var scores, const Tensor& labels, const RankOptions& o) {
  return rank_loss(g, scores, labels, o, [&g](Var d) { return g.softplus(g.shift(d, 1.0)); });
}

Var hinge_rank_loss(Graph& g, Var scores, const Tensor& labels, const RankOptions& o) {
  const double margin = o.margin;
  return rank_loss(g, scores, labels, o, [&g, margin](Var d) { return g.relu(g.shift(d, margin)); });
}

double soft_rank_loss(const Tensor& scores, const Tensor& labels, const RankOptions& o) {
  Graph g;
  return g.value(soft_rank_loss(g, g.input("scores", scores), labels, o)).item();
}

double hinge_rank_loss(const Tensor& scores, const Tensor& labels, const RankOptions& o) {
  Graph g;
  return g.value(hinge_rank_loss(g, g.input("scores", scores), labels, o)).item();
}

}  // namespace ldn::loss
