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

#include <cmath>

#include <gtest/gtest.h>

#include "ldn/diffcore/optim.hpp"
#include "ldn/error.hpp"
#include "ldn/lossmetrics/losses.hpp"
#include "ldn/lossmetrics/metrics.hpp"
#include "ldn/random.hpp"
#include "oracles.hpp"

namespace ldn::loss {
namespace {

using data::PredictionList;

TEST(Bce, Examples) {
  const Tensor hard = Tensor::matrix(2, 2, {1, 0, 0, 1});
  EXPECT_LE(bce(hard, hard), 1e-6);
  const Tensor half({2, 2}, 0.5);
  const Tensor t = Tensor::matrix(2, 2, {0.3, 1, 0, 0.9});
  EXPECT_NEAR(bce(half, t), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce(Tensor::matrix(1, 2, {0.9, 0.2}), Tensor::matrix(1, 2, {1, 0})),
              -(std::log(0.9) + std::log(0.8)) / 2, 1e-15);
  EXPECT_NEAR(bce(Tensor::matrix(1, 2, {0.9, 0.2}), Tensor::matrix(1, 2, {1, 0})), 0.164252, 1e-6);
  EXPECT_THROW(bce(half, Tensor({2, 3})), InputError);
}

TEST(Bce, MinimizedAtTarget) {
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    const double at_target =
        bce(Tensor::scalar(std::clamp(t, kBceClamp, 1 - kBceClamp)), Tensor::scalar(t));
    for (double p = 0.0; p <= 1.0; p += 0.01) {
      EXPECT_GE(bce(Tensor::scalar(p), Tensor::scalar(t)), at_target - 1e-15) << p << " " << t;
    }
  }
}

TEST(RankLosses, SinglePairExamples) {
  const Tensor labels = Tensor::matrix(1, 2, {1, 0});
  auto scores = [](double p, double n) { return Tensor::matrix(1, 2, {p, n}); };
  EXPECT_NEAR(soft_rank_loss(scores(1.5, 0.5), labels), std::log(2.0), 1e-15);
  EXPECT_NEAR(soft_rank_loss(scores(0.4, 0.4), labels), std::log(1 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(soft_rank_loss(scores(0.4, 0.4), labels), 1.313262, 1e-6);
  EXPECT_NEAR(soft_rank_loss(scores(2.5, 0.5), labels), std::log(1 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(soft_rank_loss(scores(2.5, 0.5), labels), 0.313262, 1e-6);
  EXPECT_EQ(hinge_rank_loss(scores(2.0, 0.5), labels), 0.0);
  EXPECT_EQ(hinge_rank_loss(scores(0.3, 0.3), labels), 1.0);
  EXPECT_NEAR(hinge_rank_loss(scores(0.8, 0.3), labels), 0.5, 1e-15);
  EXPECT_THROW(soft_rank_loss(scores(1, 0), Tensor::matrix(1, 2, {1, 1})), InputError);
  EXPECT_THROW(soft_rank_loss(scores(1, 0), Tensor::matrix(1, 2, {0, 0})), InputError);
  EXPECT_THROW(soft_rank_loss(scores(1, 0), Tensor::matrix(1, 2, {0.5, 0})), InputError);
}

TEST(RankLosses, PairingScopesAgainstEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 1 + rng.uniform_int(4), l = 2 + rng.uniform_int(8);
    const std::size_t k = 1 + rng.uniform_int(4);
    Tensor s({b, l}), y({b, l});
    for (double& v : s.data()) v = rng.uniform();
    for (std::size_t i = 0; i < b; ++i) {
      y.at(i, rng.uniform_int(l)) = 1.0;
      for (std::size_t j = 0; j < l; ++j)
        if (rng.bernoulli(0.2)) y.at(i, j) = 1.0;
    }
    // Top-k negatives per sample.
    std::vector<std::vector<double>> pos(b), neg(b);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < l; ++j) (y.at(i, j) == 1.0 ? pos[i] : neg[i]).push_back(s.at(i, j));
      std::sort(neg[i].rbegin(), neg[i].rend());
      if (neg[i].size() > k) neg[i].resize(k);
    }
    auto soft = [](double p, double n) { return std::log1p(std::exp(n - p + 1)); };
    double batch_sum = 0, sample_sum = 0;
    std::size_t batch_pairs = 0, sample_pairs = 0;
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t i2 = 0; i2 < b; ++i2)
        for (double p : pos[i])
          for (double n : neg[i2]) {
            batch_sum += soft(p, n);
            ++batch_pairs;
            if (i == i2) {
              sample_sum += soft(p, n);
              ++sample_pairs;
            }
          }
    RankOptions o;
    o.top_k_neg = k;
    if (batch_pairs == 0) continue;
    EXPECT_NEAR(soft_rank_loss(s, y, o), batch_sum / batch_pairs, 1e-12);
    o.scope = PairScope::kPerSample;
    if (sample_pairs) EXPECT_NEAR(soft_rank_loss(s, y, o), sample_sum / sample_pairs, 1e-12);
  }
}

TEST(RankLosses, MonotoneInPositiveAndSelectedNegative) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor s({2, 6}), y({2, 6});
    for (double& v : s.data()) v = rng.uniform();
    y.at(0, 0) = y.at(1, 2) = 1.0;
    RankOptions o;
    o.top_k_neg = 30;  // every negative is selected
    const double base = soft_rank_loss(s, y, o);
    Tensor up = s;
    up.at(0, 0) += 1e-3;
    EXPECT_LT(soft_rank_loss(up, y, o), base);
    Tensor neg = s;
    neg.at(1, 4) += 1e-3;
    EXPECT_GT(soft_rank_loss(neg, y, o), base);
  }
}

TEST(RankLosses, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  Tensor s({3, 5}), y({3, 5});
  for (double& v : s.data()) v = rng.uniform();
  y.at(0, 1) = y.at(1, 0) = y.at(2, 4) = y.at(2, 2) = 1.0;
  for (PairScope scope : {PairScope::kBatch, PairScope::kPerSample}) {
    RankOptions o;
    o.top_k_neg = 2;
    o.scope = scope;
    Graph g;
    const Var x = g.parameter("s", s);
    g.backward(soft_rank_loss(g, x, y, o));
    // Selection is piecewise constant, so small steps keep the same pairs.
    const Tensor numeric = diff::finite_diff_gradient(
        [&](const Tensor& p) { return soft_rank_loss(p, y, o); }, s);
    EXPECT_LT(diff::max_relative_error(g.grad(x), numeric), 1e-6);
  }
}

TEST(Gap, Examples) {
  GroundTruth truth{{"v", {0, 1}}};
  EXPECT_DOUBLE_EQ(gap_at_n({{"v", {{0, 0.9}, {1, 0.8}, {2, 0.1}}}}, truth), 1.0);
  truth = {{"v", {0}}};
  EXPECT_DOUBLE_EQ(gap_at_n({{"v", {{1, 0.9}, {0, 0.8}}}}, truth), 0.5);
  EXPECT_EQ(gap_at_n({{"v", {{1, 0.9}, {2, 0.8}}}}, truth), 0.0);
  EXPECT_THROW(gap_at_n({{"v", {{1, 0.9}}}}, GroundTruth{{"v", {}}}), InputError);
  EXPECT_THROW(gap_at_n({{"v", {{1, 0.9}, {1, 0.8}}}}, truth), InputError);
  EXPECT_THROW(gap_at_n({{"v", {{1, 0.9}}}, {"v", {{0, 0.5}}}}, truth), InputError);
}

TEST(Gap, TruncatesToN) {
  const GroundTruth truth{{"v", {2}}};
  const std::vector<PredictionList> p{{"v", {{0, 0.9}, {1, 0.8}, {2, 0.7}}}};
  EXPECT_DOUBLE_EQ(gap_at_n(p, truth, 3), 1.0 / 3);
  EXPECT_EQ(gap_at_n(p, truth, 2), 0.0);
}

TEST(Gap, MatchesBruteForceOracle) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = oracle::random_gap_instance(rng);
    EXPECT_NEAR(gap_at_n(inst.predictions, inst.truth, inst.n),
                oracle::brute_force_gap(inst.predictions, inst.truth, inst.n), 1e-12);
  }
}

TEST(Gap, InvariantUnderMonotoneTransform) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_gap_instance(rng);
    auto mapped = inst.predictions;
    for (auto& p : mapped)
      for (auto& e : p.entries) e.score = std::exp(3 * e.score) - 7;
    EXPECT_EQ(gap_at_n(mapped, inst.truth, inst.n), gap_at_n(inst.predictions, inst.truth, inst.n));
  }
}

TEST(Gap, MatrixFormAgreesWithLists) {
  const Tensor s = Tensor::matrix(2, 3, {0.1, 0.9, 0.5, 0.7, 0.2, 0.3});
  const GroundTruth truth{{"a", {1}}, {"b", {2}}};
  const double dense = gap_at_n(s, {"a", "b"}, truth, 2);
  const double lists = gap_at_n(data::top_n({"a", "b"}, s, 2), truth, 2);
  EXPECT_EQ(dense, lists);
  // Pool: a1 .9 (hit), b0 .7, a2 .5, b2 .3 (hit): (1 + 2/4) / 2.
  EXPECT_DOUBLE_EQ(dense, 0.75);
}

}  // namespace
}  // namespace ldn::loss
