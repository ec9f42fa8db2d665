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

#ifndef LDN_DIFFCORE_TENSOR_HPP_
#define LDN_DIFFCORE_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ldn::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major float64 array. Every extent is positive and the element
// count always equals the product of the extents.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  // 2-D access; callers guarantee rank 2.
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const double& at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * shape_[1], shape_[1]);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * shape_[1], shape_[1]);
  }

  double item() const;  // single-element tensors only
  bool all_finite() const;
  Tensor reshaped(Shape shape) const;
  void fill(double value);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace ldn::diff

#endif  // LDN_DIFFCORE_TENSOR_HPP_
