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

#ifndef LDN_DIFFCORE_OPTIM_HPP_
#define LDN_DIFFCORE_OPTIM_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "ldn/diffcore/tensor.hpp"

namespace ldn::diff {

using TensorMap = std::map<std::string, Tensor>;

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Linear ramp of the learning rate over the first warmup_steps updates.
  std::int64_t warmup_steps = 0;
};

struct AdamState {
  AdamConfig config;
  TensorMap first_moment;
  TensorMap second_moment;
  std::int64_t step = 0;
};

// Learning rate used for update number `step` (1-based).
double scheduled_learning_rate(const AdamConfig& config, std::int64_t step);

// One bias-corrected Adam update of every parameter that has a gradient.
// Parameters without a gradient entry are left untouched.
void adam_step(TensorMap& params, const TensorMap& grads, AdamState& state);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& point, double h = 1e-5);

// Largest coordinate-wise |a - n| / max(|a|, |n|, floor). The floor keeps
// coordinates whose true gradient is ~0 from dominating through rounding.
double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                          double floor = 1e-4);

}  // namespace ldn::diff

#endif  // LDN_DIFFCORE_OPTIM_HPP_
