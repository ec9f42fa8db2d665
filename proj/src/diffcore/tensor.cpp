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

#include "ldn/diffcore/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ldn/error.hpp"

namespace ldn::diff {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {

void check_shape(const Shape& shape) {
  LDN_REQUIRE(!shape.empty(), "tensor shape must have rank >= 1");
  for (std::size_t d : shape) {
    LDN_REQUIRE(d > 0, "tensor extents must be positive, got " +
                           shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  LDN_REQUIRE(shape_size(shape_) == data_.size(),
              "tensor data length " + std::to_string(data_.size()) +
                  " does not match shape " + shape_string(shape_));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

double Tensor::item() const {
  LDN_REQUIRE(data_.size() == 1, "item() on tensor of shape " +
                                     shape_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace ldn::diff
