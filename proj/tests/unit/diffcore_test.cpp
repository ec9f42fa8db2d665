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
#include <cstring>
#include <functional>
#include <numbers>

#include <gtest/gtest.h>

#include "ldn/diffcore/graph.hpp"
#include "ldn/diffcore/optim.hpp"
#include "ldn/error.hpp"
#include "ldn/random.hpp"

namespace ldn::diff {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Keep values at least `gap` away from zero so kinked ops are smooth
// within the finite-difference step.
Tensor away_from_zero(Rng& rng, Shape shape, double gap) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    const double mag = rng.uniform(gap, 1.0);
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

using UnaryBuilder = std::function<Var(Graph&, Var)>;

// Analytic vs numeric gradient of sum(op(x) * weights) w.r.t. x.
double check_unary(const UnaryBuilder& op, const Tensor& x,
                   const Tensor& weights) {
  Graph g(Mode::kEval);
  Var xv = g.parameter("x", x);
  Var out = op(g, xv);
  Var loss = g.sum_all(g.mul(out, g.constant(weights)));
  g.backward(loss);
  const Tensor analytic = g.grad(xv);
  const Tensor numeric = finite_diff_gradient(
      [&](const Tensor& p) {
        Graph h(Mode::kEval);
        Var pv = h.constant(p);
        return h.value(h.sum_all(h.mul(op(h, pv), h.constant(weights)))).item();
      },
      x);
  return max_relative_error(analytic, numeric);
}

TEST(Evaluate, SquareOfThree) {
  Graph g;
  Var x = g.input("x", Tensor::scalar(3.0));
  g.set_output("y", g.mul(x, x));
  EXPECT_EQ(g.outputs().at("y").item(), 9.0);
}

TEST(Evaluate, SigmoidOfZeroIsHalf) {
  Graph g;
  EXPECT_EQ(g.value(g.sigmoid(g.input("x", Tensor::scalar(0.0)))).item(), 0.5);
}

TEST(Evaluate, IdentityAffine) {
  Graph g;
  Tensor x = Tensor::matrix(2, 3, {1, -2, 3, 0.5, 4, -6});
  Tensor w = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Var y = g.affine(g.input("x", x), g.constant(w), g.constant(Tensor({3}, 0.0)));
  EXPECT_EQ(g.value(y), x);
}

TEST(Evaluate, ShapeMismatchIsInputError) {
  Graph g;
  Var a = g.input("a", Tensor({2}, 1.0));
  Var b = g.input("b", Tensor({3}, 1.0));
  EXPECT_THROW(g.add(a, b), InputError);
  Var x = g.input("x", Tensor({2, 4}, 1.0));
  EXPECT_THROW(g.affine(x, g.constant(Tensor({3, 2})), g.constant(Tensor({2}))),
               InputError);
}

TEST(Evaluate, NonFiniteNamesTheNode) {
  Graph g;
  Var x = g.input("x", Tensor::scalar(0.0));
  try {
    g.log(x);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::strstr(e.what(), "log"), nullptr) << e.what();
  }
}

TEST(Backward, SquareGradient) {
  Graph g;
  Var x = g.parameter("x", Tensor::scalar(3.0));
  g.backward(g.mul(x, x));
  EXPECT_EQ(g.grad(x).item(), 6.0);
}

TEST(Backward, LossMustBeScalar) {
  Graph g;
  Var x = g.parameter("x", Tensor({2}, 1.0));
  EXPECT_THROW(g.backward(g.relu(x)), InputError);
}

TEST(Backward, PowerExponentGradientAtE) {
  Graph g;
  Var u = g.constant(Tensor::scalar(std::numbers::e));
  Var p = g.parameter("p", Tensor::scalar(2.0));
  g.backward(g.sum_all(g.power(u, p)));
  EXPECT_NEAR(g.grad(p).item(), std::exp(2.0), 1e-12);
}

TEST(Backward, PowerAtZeroHasZeroGradients) {
  Graph g;
  Var u = g.parameter("u", Tensor({2}, {0.0, 4.0}));
  Var p = g.parameter("p", Tensor::scalar(0.5));
  g.backward(g.sum_all(g.power(u, p)));
  EXPECT_EQ(g.grad(u)[0], 0.0);
  EXPECT_DOUBLE_EQ(g.grad(u)[1], 0.25);
  EXPECT_DOUBLE_EQ(g.grad(p).item(), 2.0 * std::log(4.0));
}

TEST(Backward, MeanReluAffineMatchesFiniteDifferences) {
  Rng rng(7);
  const Tensor x = random_tensor(rng, {3, 3});
  const Tensor w0 = random_tensor(rng, {3, 3});
  const Tensor b = random_tensor(rng, {3});
  auto loss_of = [&](const Tensor& w) {
    Graph h;
    return h.value(h.mean_all(h.relu(h.affine(h.constant(x), h.constant(w),
                                              h.constant(b)))))
        .item();
  };
  Graph g;
  Var w = g.parameter("W", w0);
  g.backward(g.mean_all(g.relu(g.affine(g.constant(x), w, g.constant(b)))));
  const Tensor numeric = finite_diff_gradient(loss_of, w0, 1e-5);
  const Tensor analytic = g.grad(w);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(std::abs(numeric[i]), 1e-12);
    if (numeric[i] == 0.0 && analytic[i] == 0.0) continue;
    EXPECT_LT(std::abs(analytic[i] - numeric[i]) / denom, 1e-6) << i;
  }
}

TEST(FiniteDiff, QuadraticAndLinear) {
  const Tensor g1 = finite_diff_gradient(
      [](const Tensor& t) { return t[0] * t[0]; }, Tensor::scalar(3.0), 1e-5);
  EXPECT_NEAR(g1.item(), 6.0, 1e-9);
  const Tensor g2 = finite_diff_gradient(
      [](const Tensor& t) {
        double s = 0;
        for (double v : t.data()) s += v;
        return s;
      },
      Tensor({4}, {0.3, -2.0, 7.0, 1e3}), 1e-5);
  for (double v : g2.data()) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(FiniteDiff, NonFiniteIsNumericError) {
  EXPECT_THROW(finite_diff_gradient([](const Tensor& t) { return std::log(t[0]); },
                                    Tensor::scalar(0.0), 1e-5),
               NumericError);
  EXPECT_THROW(finite_diff_gradient([](const Tensor&) { return 0.0; },
                                    Tensor::scalar(1.0), 0.0),
               InputError);
}

// One entry per primitive: builder plus input generator.
struct PrimitiveCase {
  const char* name;
  UnaryBuilder op;
  std::function<Tensor(Rng&)> point;
};

std::vector<PrimitiveCase> primitive_cases() {
  auto plain = [](Rng& r) { return random_tensor(r, {3, 4}, -2.0, 2.0); };
  auto kinked = [](Rng& r) { return away_from_zero(r, {3, 4}, 1e-3); };
  auto positive = [](Rng& r) { return random_tensor(r, {3, 4}, 1e-3, 2.0); };
  std::vector<PrimitiveCase> cases;
  cases.push_back({"affine",
                   [](Graph& g, Var x) {
                     Rng r(11);
                     return g.affine(x, g.constant(random_tensor(r, {4, 5})),
                                     g.constant(random_tensor(r, {5})));
                   },
                   plain});
  cases.push_back({"relu", [](Graph& g, Var x) { return g.relu(x); }, kinked});
  cases.push_back({"sigmoid", [](Graph& g, Var x) { return g.sigmoid(x); }, plain});
  cases.push_back({"tanh", [](Graph& g, Var x) { return g.tanh(x); }, plain});
  cases.push_back({"softmax", [](Graph& g, Var x) { return g.softmax(x); }, plain});
  cases.push_back({"batch_norm_train",
                   [](Graph& g, Var x) {
                     // Train-mode statistics depend on x; graph mode is
                     // overridden by building a dedicated train graph.
                     return g.batch_norm(x, g.constant(Tensor({4}, {1.0, 0.5, 2.0, -1.0})),
                                         g.constant(Tensor({4}, {0.1, 0.0, -0.3, 0.2})),
                                         "bn/", Tensor({4}, 0.0), Tensor({4}, 1.0));
                   },
                   plain});
  cases.push_back({"power",
                   [](Graph& g, Var x) {
                     return g.power(x, g.constant(Tensor::scalar(0.628)));
                   },
                   positive});
  cases.push_back({"concat",
                   [](Graph& g, Var x) {
                     const Var parts[] = {x, g.tanh(x)};
                     return g.concat(parts);
                   },
                   plain});
  cases.push_back({"mean_axis0",
                   [](Graph& g, Var x) { return g.mean(x, 0); }, plain});
  cases.push_back({"mean_axis1",
                   [](Graph& g, Var x) { return g.mean(x, 1); }, plain});
  cases.push_back({"add_mul",
                   [](Graph& g, Var x) { return g.add(g.mul(x, x), x); }, plain});
  cases.push_back({"sub_scale_shift",
                   [](Graph& g, Var x) {
                     return g.sub(g.shift(g.scale(x, -1.5), 0.25), g.exp(x));
                   },
                   plain});
  cases.push_back({"log", [](Graph& g, Var x) { return g.log(x); }, positive});
  cases.push_back({"exp", [](Graph& g, Var x) { return g.exp(x); }, plain});
  cases.push_back({"softplus", [](Graph& g, Var x) { return g.softplus(x); }, plain});
  cases.push_back({"clamp",
                   [](Graph& g, Var x) { return g.clamp(x, -0.5, 0.5); },
                   [](Rng& r) {
                     Tensor t(Shape{3, 4});
                     // Stay clear of the clamp corners.
                     for (double& v : t.data()) {
                       const double u = r.uniform();
                       v = u < 0.33 ? r.uniform(-2, -0.51)
                                    : (u < 0.66 ? r.uniform(-0.49, 0.49)
                                                : r.uniform(0.51, 2));
                     }
                     return t;
                   }});
  cases.push_back({"segment_sum",
                   [](Graph& g, Var x) {
                     const std::size_t offs[] = {0, 1, 3};
                     return g.segment_sum(x, offs);
                   },
                   plain});
  cases.push_back({"gather",
                   [](Graph& g, Var x) { return g.gather(x, {0, 5, 5, 11, 7}); },
                   plain});
  cases.push_back({"pairwise_diff",
                   [](Graph& g, Var x) {
                     Var flat = g.reshape(x, {12});
                     return g.pairwise_diff(g.gather(flat, {0, 1, 2}),
                                            g.gather(flat, {3, 4, 5, 6}));
                   },
                   plain});
  cases.push_back({"mix_frames",
                   [](Graph& g, Var x) {
                     // x as 3 coefficient rows over 4 frames.
                     Rng r(5);
                     return g.mix_frames(x, g.constant(random_tensor(r, {2, 4, 3})));
                   },
                   plain});
  return cases;
}

TEST(Primitives, BackwardMatchesFiniteDifferencesAtRandomPoints) {
  for (const PrimitiveCase& c : primitive_cases()) {
    Rng rng(Rng::derive(99, c.name));
    const bool train_bn = std::string(c.name) == "batch_norm_train";
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor x = c.point(rng);
      Graph probe;
      Var out = c.op(probe, probe.constant(x));
      const Tensor weights = random_tensor(rng, probe.value(out).shape());
      if (train_bn) {
        auto build = [&](Graph& g, Var v) { return c.op(g, v); };
        Graph g(Mode::kTrain);
        Var xv = g.parameter("x", x);
        g.backward(g.sum_all(g.mul(build(g, xv), g.constant(weights))));
        const Tensor numeric = finite_diff_gradient(
            [&](const Tensor& p) {
              Graph h(Mode::kTrain);
              return h.value(h.sum_all(h.mul(build(h, h.constant(p)),
                                             h.constant(weights))))
                  .item();
            },
            x);
        worst = std::max(worst, max_relative_error(g.grad(xv), numeric));
      } else {
        worst = std::max(worst, check_unary(c.op, x, weights));
      }
    }
    EXPECT_LT(worst, 1e-4) << c.name;
  }
}

TEST(Primitives, PowerExponentGradientAtRandomPoints) {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor u = random_tensor(rng, {6}, 1e-3, 3.0);
    const Tensor p0 = Tensor::scalar(rng.uniform(0.2, 2.0));
    Graph g;
    Var p = g.parameter("p", p0);
    g.backward(g.sum_all(g.power(g.constant(u), p)));
    const Tensor numeric = finite_diff_gradient(
        [&](const Tensor& pt) {
          Graph h;
          return h.value(h.sum_all(h.power(h.constant(u), h.constant(pt)))).item();
        },
        p0);
    worst = std::max(worst, max_relative_error(g.grad(p), numeric));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Properties, EvalModeIsBitDeterministic) {
  Rng rng(1);
  const Tensor x = random_tensor(rng, {4, 3});
  const Tensor w = random_tensor(rng, {3, 2});
  auto run = [&] {
    Graph g(Mode::kEval, 123);
    Var h = g.batch_norm(g.affine(g.input("x", x), g.constant(w),
                                  g.constant(Tensor({2}, 0.1))),
                         g.constant(Tensor({2}, 1.0)), g.constant(Tensor({2}, 0.0)),
                         "bn/", Tensor({2}, 0.2), Tensor({2}, 1.5));
    return g.value(g.sigmoid(g.dropout(h, 0.5)));
  };
  const Tensor a = run();
  const Tensor b = run();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)), 0);
}

TEST(Properties, InvertedDropoutPreservesExpectation) {
  const Tensor x({1, 8}, {0.5, 1.0, 2.0, -1.0, 3.0, 0.25, -0.75, 1.5});
  for (double rate : {0.1, 0.5}) {
    Tensor total(x.shape(), 0.0);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      Graph g(Mode::kTrain, Rng::derive(17, "dropout", t));
      const Tensor& y = g.value(g.dropout(g.input("x", x), rate));
      for (std::size_t i = 0; i < y.size(); ++i) total[i] += y[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LT(std::abs(total[i] / trials - x[i]), 0.02 * std::abs(x[i]))
          << "rate " << rate << " coord " << i;
    }
  }
}

TEST(Properties, BatchNormTrainStatistics) {
  Rng rng(21);
  const BatchNormOptions opts;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 2 + rng.uniform_int(30), feats = 1 + rng.uniform_int(6);
    // The eps in the denominator biases the normalized variance to
    // var / (var + eps); with feature scale >= 10 that bias is below 1e-6.
    const double scale = rng.uniform(10.0, 50.0);
    const Tensor x = random_tensor(rng, {rows, feats}, -scale, scale);
    Graph g(Mode::kTrain);
    const Tensor& y = g.value(g.batch_norm(
        g.input("x", x), g.constant(Tensor({feats}, 1.0)),
        g.constant(Tensor({feats}, 0.0)), "bn/", Tensor({feats}, 0.0),
        Tensor({feats}, 1.0), opts));
    for (std::size_t j = 0; j < feats; ++j) {
      double mu = 0, var = 0, raw_mu = 0, raw_var = 0;
      for (std::size_t r = 0; r < rows; ++r) {
        mu += y.at(r, j);
        raw_mu += x.at(r, j);
      }
      mu /= rows;
      raw_mu /= rows;
      for (std::size_t r = 0; r < rows; ++r) {
        var += (y.at(r, j) - mu) * (y.at(r, j) - mu);
        raw_var += (x.at(r, j) - raw_mu) * (x.at(r, j) - raw_mu);
      }
      var /= rows;
      raw_var /= rows;
      EXPECT_LT(std::abs(mu), 1e-6);
      EXPECT_NEAR(var, raw_var / (raw_var + opts.epsilon), 1e-12);
      if (raw_var > 0.0 && opts.epsilon / raw_var < 1e-6) EXPECT_NEAR(var, 1.0, 1e-6);
    }
  }
}

TEST(Properties, BatchNormTrainUpdatesRunningStats) {
  Graph g(Mode::kTrain);
  const Tensor x({2, 1}, {1.0, 3.0});
  g.batch_norm(g.input("x", x), g.constant(Tensor({1}, 1.0)),
               g.constant(Tensor({1}, 0.0)), "l/", Tensor({1}, 0.0),
               Tensor({1}, 1.0));
  EXPECT_DOUBLE_EQ(g.buffer_updates().at("l/running_mean")[0], 0.1 * 2.0);
  // Unbiased batch variance of {1, 3} is 2.
  EXPECT_DOUBLE_EQ(g.buffer_updates().at("l/running_var")[0], 0.9 + 0.1 * 2.0);
  Graph single(Mode::kTrain);
  EXPECT_THROW(single.batch_norm(single.input("x", Tensor({1, 1}, 1.0)),
                                 single.constant(Tensor({1}, 1.0)),
                                 single.constant(Tensor({1}, 0.0)), "l/",
                                 Tensor({1}, 0.0), Tensor({1}, 1.0)),
               InputError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  TensorMap params{{"w", Tensor({3}, {1.0, -2.0, 0.5})}};
  const TensorMap before = params;
  AdamState state;
  adam_step(params, {{"w", Tensor({3}, 0.0)}}, state);
  EXPECT_EQ(params.at("w"), before.at("w"));
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TensorMap params{{"w", Tensor::scalar(1.0)}};
  AdamState state;
  state.config.learning_rate = 0.1;
  state.config.epsilon = 1e-12;
  adam_step(params, {{"w", Tensor::scalar(2.0)}}, state);
  EXPECT_NEAR(params.at("w").item(), 0.9, 1e-10);
}

TEST(Adam, TwoStepHandTrace) {
  // Hand execution with g = 2, lr = 0.1, beta1 0.9, beta2 0.999, eps 1e-8:
  //   t=1: m = 0.2, v = 0.004, m^ = 2, v^ = 4, step = 0.1 * 2 / (2 + 1e-8)
  //   t=2: m = 0.38, v = 0.007996, m^ = 0.38 / 0.19 = 2,
  //        v^ = 0.007996 / 0.001999 = 4, same step again.
  TensorMap params{{"w", Tensor::scalar(1.0)}};
  AdamState state;
  state.config.learning_rate = 0.1;
  const double step = 0.1 * 2.0 / (2.0 + 1e-8);
  adam_step(params, {{"w", Tensor::scalar(2.0)}}, state);
  EXPECT_NEAR(params.at("w").item(), 1.0 - step, 1e-14);
  adam_step(params, {{"w", Tensor::scalar(2.0)}}, state);
  EXPECT_NEAR(params.at("w").item(), 1.0 - 2.0 * step, 1e-13);
  EXPECT_NEAR(state.first_moment.at("w").item(), 0.38, 1e-15);
  EXPECT_NEAR(state.second_moment.at("w").item(), 0.007996, 1e-15);
  EXPECT_EQ(state.step, 2);
}

TEST(Adam, WarmupRampsLinearly) {
  AdamConfig c;
  c.learning_rate = 0.01;
  c.warmup_steps = 4;
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(c, 1), 0.0025);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(c, 3), 0.0075);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(c, 4), 0.01);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(c, 100), 0.01);
}

TEST(Adam, ShapeMismatchIsInputError) {
  TensorMap params{{"w", Tensor({2}, 0.0)}};
  AdamState state;
  EXPECT_THROW(adam_step(params, {{"w", Tensor({3}, 1.0)}}, state), InputError);
  EXPECT_EQ(state.step, 0);
}

}  // namespace
}  // namespace ldn::diff
