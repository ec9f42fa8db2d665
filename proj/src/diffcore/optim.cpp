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

#include "ldn/diffcore/optim.hpp"

#include <algorithm>
#include <cmath>

#include "ldn/error.hpp"

namespace ldn::diff {

double scheduled_learning_rate(const AdamConfig& config, std::int64_t step) {
  if (config.warmup_steps <= 0 || step >= config.warmup_steps) {
    return config.learning_rate;
  }
  return config.learning_rate * static_cast<double>(step) /
         static_cast<double>(config.warmup_steps);
}

void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state) {
  LDN_REQUIRE(state.step >= 0, "adam_step: negative step counter");
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    LDN_REQUIRE(it != params.end(), "adam_step: gradient for unknown parameter '" +
                                        name + "'");
    LDN_REQUIRE(it->second.shape() == g.shape(),
                "adam_step: shape mismatch for '" + name + "'");
  }
  const AdamConfig& c = state.config;
  const std::int64_t t = ++state.step;
  const double lr = scheduled_learning_rate(c, t);
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto [mit, m_new] = state.first_moment.try_emplace(name, g.shape(), 0.0);
    auto [vit, v_new] = state.second_moment.try_emplace(name, g.shape(), 0.0);
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    LDN_REQUIRE(m.shape() == g.shape() && v.shape() == g.shape(),
                "adam_step: moment shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& point, double h) {
  LDN_REQUIRE(h > 0.0, "finite_diff_gradient: step must be positive");
  Tensor grad(point.shape());
  Tensor x = point;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_gradient: non-finite evaluation at "
                         "coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                          double floor) {
  LDN_REQUIRE(analytic.shape() == numeric.shape(),
              "max_relative_error: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace ldn::diff
