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

#ifndef LDN_DIFFCORE_GRAPH_HPP_
#define LDN_DIFFCORE_GRAPH_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ldn/diffcore/tensor.hpp"
#include "ldn/random.hpp"

namespace ldn::diff {

enum class Mode { kTrain, kEval };

// Handle to a node of a Graph. Only meaningful for the graph that made it.
struct Var {
  static constexpr std::size_t kInvalid = static_cast<std::size_t>(-1);
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

struct BatchNormOptions {
  double momentum = 0.9;
  double epsilon = 1e-5;
};

// Define-by-run reverse-mode graph. Every op computes its value as soon as
// it is appended, so node order is the topological order. Values are
// checked after each op; a non-finite result raises NumericError naming
// the node.
//
// In train mode dropout is active and batch-norm uses batch statistics
// (the updated running statistics are collected in buffer_updates() and
// committed by the caller). Eval mode is a pure function of the bound
// parameters and inputs.
class Graph {
 public:
  explicit Graph(Mode mode = Mode::kEval, std::uint64_t seed = 0);

  Mode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  // Leaves.
  Var input(const std::string& name, Tensor value);
  Var constant(Tensor value);
  Var parameter(const std::string& name, Tensor value);

  // Elementwise on equal shapes.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var shift(Var a, double offset);
  Var relu(Var x);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var log(Var x);
  Var exp(Var x);
  Var softplus(Var x);
  Var clamp(Var x, double lo, double hi);
  // u^p with a trainable single-element exponent p; u must be >= 0.
  // At u == 0 both partial derivatives are taken as 0.
  Var power(Var u, Var p);

  // x: [B x in], w: [in x out], b: [out].
  Var affine(Var x, Var w, Var b);
  // Softmax over the last axis of a rank-2 tensor.
  Var softmax(Var x);
  // x: [B x F]; gamma, beta: [F]. Running statistics are read in eval mode
  // and updated (into buffer_updates) in train mode under
  // "<prefix>running_mean" / "<prefix>running_var".
  Var batch_norm(Var x, Var gamma, Var beta, const std::string& prefix,
                 const Tensor& running_mean, const Tensor& running_var,
                 BatchNormOptions options = {});
  // Inverted dropout; identity in eval mode or when rate is 0.
  Var dropout(Var x, double rate);
  // Column-wise concatenation of rank-2 tensors with equal row counts.
  Var concat(std::span<const Var> parts);
  // Mean of a rank-2 tensor over axis 0 (-> [cols]) or 1 (-> [rows]).
  Var mean(Var x, std::size_t axis);
  Var mean_all(Var x);
  Var sum_all(Var x);
  // Row sums of x: [N x K] over consecutive row ranges
  // [offsets[s], offsets[s+1]); result [S x K].
  Var segment_sum(Var x, std::span<const std::size_t> offsets);
  // Flat-index selection; result [indices.size()].
  Var gather(Var x, std::vector<std::size_t> flat_indices);
  // a: [n], b: [m] -> [n x m] with out(i, j) = b(j) - a(i).
  Var pairwise_diff(Var a, Var b);
  // coeffs: [m x T], frames: [B x T x D] -> [B x (m*D)], each sample's
  // m rows of coeffs * frames laid out row after row.
  Var mix_frames(Var coeffs, Var frames);
  Var reshape(Var x, Shape shape);

  const Tensor& value(Var v) const;
  const std::string& op_name(Var v) const;

  // Named outputs, for callers that treat the graph as a function.
  void set_output(const std::string& name, Var v);
  std::map<std::string, Tensor> outputs() const;

  // Reverse pass from a single-element node. May be called once.
  void backward(Var loss);
  // Gradient of the last backward() w.r.t. v (zeros if v was not reached).
  Tensor grad(Var v) const;
  std::map<std::string, Tensor> parameter_gradients() const;
  const std::map<std::string, Tensor>& buffer_updates() const {
    return buffer_updates_;
  }

 private:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::string name;
    bool is_parameter = false;
    bool requires_grad = false;
  };

  Var push(std::string op, Tensor value, std::vector<std::size_t> inputs,
           BackwardFn backward);
  const Node& node(Var v) const;
  Tensor& grad_ref(std::size_t id);
  bool needs(std::size_t id) const { return nodes_[id].requires_grad; }
  Var unary(Var x, const char* name, double (*f)(double),
            double (*df)(double, double));

  Mode mode_;
  Rng rng_;
  std::vector<Node> nodes_;
  std::map<std::string, Var> outputs_;
  std::map<std::string, Tensor> buffer_updates_;
  bool backward_done_ = false;
};

}  // namespace ldn::diff

#endif  // LDN_DIFFCORE_GRAPH_HPP_
