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

#include "ldn/diffcore/graph.hpp"

#include <algorithm>
#include <cmath>

#include "ldn/error.hpp"

namespace ldn::diff {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  LDN_REQUIRE(a.shape() == b.shape(),
              std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                  " vs " + shape_string(b.shape()));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  LDN_REQUIRE(t.rank() == rank, std::string(op) + ": expected rank " +
                                    std::to_string(rank) + ", got " +
                                    shape_string(t.shape()));
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Graph::Graph(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

Var Graph::push(std::string op, Tensor value, std::vector<std::size_t> inputs,
                BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("node " + std::to_string(nodes_.size()) + " (" + op +
                       ") produced a non-finite value");
  }
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [&](std::size_t i) { return needs(i); });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  LDN_REQUIRE(v.id < nodes_.size(), "invalid graph variable");
  return nodes_[v.id];
}

Tensor& Graph::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

const Tensor& Graph::value(Var v) const { return node(v).value; }
const std::string& Graph::op_name(Var v) const { return node(v).op; }

Var Graph::input(const std::string& name, Tensor value) {
  Var v = push("input", std::move(value), {}, nullptr);
  nodes_[v.id].name = name;
  return v;
}

Var Graph::constant(Tensor value) {
  return push("constant", std::move(value), {}, nullptr);
}

Var Graph::parameter(const std::string& name, Tensor value) {
  if (!value.all_finite()) {
    throw NumericError("parameter '" + name + "' is non-finite");
  }
  Node n;
  n.op = "parameter";
  n.value = std::move(value);
  n.name = name;
  n.is_parameter = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Graph::set_output(const std::string& name, Var v) {
  node(v);
  outputs_[name] = v;
}

std::map<std::string, Tensor> Graph::outputs() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : outputs_) out.emplace(name, value(v));
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Var Graph::add(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return push("add", std::move(out), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const Node& n = g.nodes_[self];
    for (std::size_t k = 0; k < 2; ++k) {
      const std::size_t in = n.inputs[k];
      if (!g.needs(in)) continue;
      Tensor& gi = g.grad_ref(in);
      const Tensor& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
    }
  });
}

Var Graph::sub(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_same_shape(x, y, "sub");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return push("sub", std::move(out), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto ins = g.nodes_[self].inputs;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!g.needs(ins[k])) continue;
      Tensor& gi = g.grad_ref(ins[k]);
      const Tensor& go = g.nodes_[self].grad;
      const double sign = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += sign * go[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_same_shape(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return push("mul", std::move(out), {a.id, b.id}, [](Graph& g, std::size_t self) {
    const auto ins = g.nodes_[self].inputs;
    for (std::size_t k = 0; k < 2; ++k) {
      if (!g.needs(ins[k])) continue;
      // Copy the other factor: ins[0] may equal ins[1] and grad_ref may
      // allocate into the same node.
      const Tensor other = g.nodes_[ins[1 - k]].value;
      Tensor& gi = g.grad_ref(ins[k]);
      const Tensor& go = g.nodes_[self].grad;
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i] * other[i];
    }
  });
}

Var Graph::scale(Var a, double factor) {
  Tensor out = value(a);
  for (double& v : out.data()) v *= factor;
  return push("scale", std::move(out), {a.id},
              [factor](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const Tensor& go = g.nodes_[self].grad;
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += factor * go[i];
              });
}

Var Graph::shift(Var a, double offset) {
  Tensor out = value(a);
  for (double& v : out.data()) v += offset;
  return push("shift", std::move(out), {a.id}, [](Graph& g, std::size_t self) {
    Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
    const Tensor& go = g.nodes_[self].grad;
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
  });
}

Var Graph::unary(Var x, const char* name, double (*f)(double),
                 double (*df)(double, double)) {
  Tensor out = value(x);
  for (double& v : out.data()) v = f(v);
  return push(name, std::move(out), {x.id}, [df](Graph& g, std::size_t self) {
    const std::size_t in = g.nodes_[self].inputs[0];
    Tensor& gi = g.grad_ref(in);
    const Node& n = g.nodes_[self];
    const Tensor& xin = g.nodes_[in].value;
    for (std::size_t i = 0; i < gi.size(); ++i) {
      gi[i] += n.grad[i] * df(xin[i], n.value[i]);
    }
  });
}

Var Graph::relu(Var x) {
  return unary(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var Graph::sigmoid(Var x) {
  return unary(
      x, "sigmoid", stable_sigmoid,
      [](double, double y) { return y * (1.0 - y); });
}

Var Graph::tanh(Var x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var Graph::log(Var x) {
  return unary(
      x, "log", [](double v) { return std::log(v); },
      [](double in, double) { return 1.0 / in; });
}

Var Graph::exp(Var x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var Graph::softplus(Var x) {
  return unary(
      x, "softplus",
      [](double v) {
        return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      },
      [](double in, double) { return stable_sigmoid(in); });
}

Var Graph::clamp(Var x, double lo, double hi) {
  LDN_REQUIRE(lo <= hi, "clamp: lo > hi");
  Tensor out = value(x);
  for (double& v : out.data()) v = std::clamp(v, lo, hi);
  return push("clamp", std::move(out), {x.id},
              [lo, hi](Graph& g, std::size_t self) {
                const std::size_t in = g.nodes_[self].inputs[0];
                Tensor& gi = g.grad_ref(in);
                const Tensor& xin = g.nodes_[in].value;
                const Tensor& go = g.nodes_[self].grad;
                for (std::size_t i = 0; i < gi.size(); ++i) {
                  if (xin[i] >= lo && xin[i] <= hi) gi[i] += go[i];
                }
              });
}

Var Graph::power(Var u, Var p) {
  const Tensor& base = value(u);
  LDN_REQUIRE(value(p).size() == 1, "power: exponent must have one element");
  const double e = value(p)[0];
  Tensor out(base.shape());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double b = base[i];
    if (b < 0.0) {
      throw NumericError("node " + std::to_string(nodes_.size()) +
                         " (power) has a negative base");
    }
    out[i] = b > 0.0 ? std::pow(b, e) : (e > 0.0 ? 0.0 : std::pow(b, e));
  }
  return push("power", std::move(out), {u.id, p.id},
              [](Graph& g, std::size_t self) {
                const auto ins = g.nodes_[self].inputs;
                const double e = g.nodes_[ins[1]].value[0];
                const Tensor base = g.nodes_[ins[0]].value;
                const Tensor& y = g.nodes_[self].value;
                const Tensor go = g.nodes_[self].grad;
                if (g.needs(ins[0])) {
                  Tensor& gu = g.grad_ref(ins[0]);
                  for (std::size_t i = 0; i < gu.size(); ++i) {
                    if (base[i] > 0.0) gu[i] += go[i] * e * y[i] / base[i];
                  }
                }
                if (g.needs(ins[1])) {
                  double acc = 0.0;
                  for (std::size_t i = 0; i < base.size(); ++i) {
                    if (base[i] > 0.0) acc += go[i] * y[i] * std::log(base[i]);
                  }
                  g.grad_ref(ins[1])[0] += acc;
                }
              });
}

// ---------------------------------------------------------------------------
// Structural

Var Graph::affine(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  require_rank(xv, 2, "affine input");
  require_rank(wv, 2, "affine weight");
  const std::size_t rows = xv.dim(0), in = xv.dim(1), out_dim = wv.dim(1);
  LDN_REQUIRE(wv.dim(0) == in, "affine: input width " + std::to_string(in) +
                                   " does not match weight " +
                                   shape_string(wv.shape()));
  LDN_REQUIRE(bv.size() == out_dim, "affine: bias size mismatch");
  Tensor out({rows, out_dim});
  for (std::size_t r = 0; r < rows; ++r) {
    double* o = &out.at(r, 0);
    for (std::size_t j = 0; j < out_dim; ++j) o[j] = bv[j];
    const double* xr = &xv.at(r, 0);
    for (std::size_t k = 0; k < in; ++k) {
      const double xk = xr[k];
      if (xk == 0.0) continue;
      const double* wr = &wv.at(k, 0);
      for (std::size_t j = 0; j < out_dim; ++j) o[j] += xk * wr[j];
    }
  }
  return push("affine", std::move(out), {x.id, w.id, b.id},
              [](Graph& g, std::size_t self) {
                const auto ins = g.nodes_[self].inputs;
                const Tensor& go = g.nodes_[self].grad;
                const Tensor& xv = g.nodes_[ins[0]].value;
                const Tensor& wv = g.nodes_[ins[1]].value;
                const std::size_t rows = xv.dim(0), in = xv.dim(1),
                                  out_dim = wv.dim(1);
                if (g.needs(ins[0])) {
                  Tensor& gx = g.grad_ref(ins[0]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* gr = &go.at(r, 0);
                    for (std::size_t k = 0; k < in; ++k) {
                      const double* wr = &wv.at(k, 0);
                      double acc = 0.0;
                      for (std::size_t j = 0; j < out_dim; ++j) acc += gr[j] * wr[j];
                      gx.at(r, k) += acc;
                    }
                  }
                }
                if (g.needs(ins[1])) {
                  Tensor& gw = g.grad_ref(ins[1]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* gr = &go.at(r, 0);
                    for (std::size_t k = 0; k < in; ++k) {
                      const double xk = xv.at(r, k);
                      if (xk == 0.0) continue;
                      double* wr = &gw.at(k, 0);
                      for (std::size_t j = 0; j < out_dim; ++j) wr[j] += xk * gr[j];
                    }
                  }
                }
                if (g.needs(ins[2])) {
                  Tensor& gb = g.grad_ref(ins[2]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < out_dim; ++j) gb[j] += go.at(r, j);
                  }
                }
              });
}

Var Graph::softmax(Var x) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "softmax");
  Tensor out(xv.shape());
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto in = xv.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      out.at(r, c) = std::exp(in[c] - mx);
      total += out.at(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= total;
  }
  return push("softmax", std::move(out), {x.id}, [](Graph& g, std::size_t self) {
    const Node& n = g.nodes_[self];
    Tensor& gi = g.grad_ref(n.inputs[0]);
    const Tensor& y = g.nodes_[self].value;
    const Tensor& go = g.nodes_[self].grad;
    const std::size_t rows = y.dim(0), cols = y.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += go.at(r, c) * y.at(r, c);
      for (std::size_t c = 0; c < cols; ++c) {
        gi.at(r, c) += y.at(r, c) * (go.at(r, c) - dot);
      }
    }
  });
}

Var Graph::batch_norm(Var x, Var gamma, Var beta, const std::string& prefix,
                      const Tensor& running_mean, const Tensor& running_var,
                      BatchNormOptions options) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "batch_norm");
  const std::size_t rows = xv.dim(0), feats = xv.dim(1);
  LDN_REQUIRE(value(gamma).size() == feats && value(beta).size() == feats &&
                  running_mean.size() == feats && running_var.size() == feats,
              "batch_norm: per-feature tensors must have " +
                  std::to_string(feats) + " entries");
  const Tensor& gv = value(gamma);
  const Tensor& bv = value(beta);
  const bool train = mode_ == Mode::kTrain;
  LDN_REQUIRE(!train || rows >= 2,
              "batch_norm: train mode needs a batch of at least 2");

  Tensor xhat(xv.shape());
  Tensor inv_std({feats});
  if (train) {
    Tensor new_mean = running_mean;
    Tensor new_var = running_var;
    for (std::size_t j = 0; j < feats; ++j) {
      double mu = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mu += xv.at(r, j);
      mu /= static_cast<double>(rows);
      double var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double d = xv.at(r, j) - mu;
        var += d * d;
      }
      var /= static_cast<double>(rows);
      inv_std[j] = 1.0 / std::sqrt(var + options.epsilon);
      for (std::size_t r = 0; r < rows; ++r) {
        xhat.at(r, j) = (xv.at(r, j) - mu) * inv_std[j];
      }
      const double unbiased =
          var * static_cast<double>(rows) / static_cast<double>(rows - 1);
      new_mean[j] = options.momentum * running_mean[j] +
                    (1.0 - options.momentum) * mu;
      new_var[j] = options.momentum * running_var[j] +
                   (1.0 - options.momentum) * unbiased;
    }
    buffer_updates_[prefix + "running_mean"] = std::move(new_mean);
    buffer_updates_[prefix + "running_var"] = std::move(new_var);
  } else {
    for (std::size_t j = 0; j < feats; ++j) {
      inv_std[j] = 1.0 / std::sqrt(running_var[j] + options.epsilon);
      for (std::size_t r = 0; r < rows; ++r) {
        xhat.at(r, j) = (xv.at(r, j) - running_mean[j]) * inv_std[j];
      }
    }
  }

  Tensor out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < feats; ++j) {
      out.at(r, j) = gv[j] * xhat.at(r, j) + bv[j];
    }
  }
  return push(
      "batch_norm", std::move(out), {x.id, gamma.id, beta.id},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), train](
          Graph& g, std::size_t self) {
        const auto ins = g.nodes_[self].inputs;
        const Tensor go = g.nodes_[self].grad;
        const Tensor& gv = g.nodes_[ins[1]].value;
        const std::size_t rows = go.dim(0), feats = go.dim(1);
        if (g.needs(ins[1])) {
          Tensor& gg = g.grad_ref(ins[1]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < feats; ++j)
              gg[j] += go.at(r, j) * xhat.at(r, j);
        }
        if (g.needs(ins[2])) {
          Tensor& gb = g.grad_ref(ins[2]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < feats; ++j) gb[j] += go.at(r, j);
        }
        if (!g.needs(ins[0])) return;
        Tensor& gx = g.grad_ref(ins[0]);
        const double n = static_cast<double>(rows);
        for (std::size_t j = 0; j < feats; ++j) {
          if (!train) {
            for (std::size_t r = 0; r < rows; ++r)
              gx.at(r, j) += go.at(r, j) * gv[j] * inv_std[j];
            continue;
          }
          double sum_d = 0.0, sum_dx = 0.0;
          for (std::size_t r = 0; r < rows; ++r) {
            const double d = go.at(r, j) * gv[j];
            sum_d += d;
            sum_dx += d * xhat.at(r, j);
          }
          for (std::size_t r = 0; r < rows; ++r) {
            const double d = go.at(r, j) * gv[j];
            gx.at(r, j) +=
                inv_std[j] / n * (n * d - sum_d - xhat.at(r, j) * sum_dx);
          }
        }
      });
}

Var Graph::dropout(Var x, double rate) {
  LDN_REQUIRE(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
  if (mode_ == Mode::kEval || rate == 0.0) return x;
  const Tensor& xv = value(x);
  Tensor mask(xv.shape());
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng_.uniform() < keep ? 1.0 / keep : 0.0;
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return push("dropout", std::move(out), {x.id},
              [mask = std::move(mask)](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const Tensor& go = g.nodes_[self].grad;
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i] * mask[i];
              });
}

Var Graph::concat(std::span<const Var> parts) {
  LDN_REQUIRE(!parts.empty(), "concat: no inputs");
  const std::size_t rows = value(parts[0]).dim(0);
  std::size_t cols = 0;
  std::vector<std::size_t> ins;
  for (Var p : parts) {
    const Tensor& t = value(p);
    require_rank(t, 2, "concat");
    LDN_REQUIRE(t.dim(0) == rows, "concat: row count mismatch");
    cols += t.dim(1);
    ins.push_back(p.id);
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& t = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < t.dim(1); ++c)
        out.at(r, offset + c) = t.at(r, c);
    offset += t.dim(1);
  }
  return push("concat", std::move(out), std::move(ins),
              [](Graph& g, std::size_t self) {
                const auto ins = g.nodes_[self].inputs;
                std::size_t offset = 0;
                for (std::size_t in : ins) {
                  const std::size_t width = g.nodes_[in].value.dim(1);
                  if (g.needs(in)) {
                    Tensor& gi = g.grad_ref(in);
                    for (std::size_t r = 0; r < gi.dim(0); ++r)
                      for (std::size_t c = 0; c < width; ++c)
                        gi.at(r, c) += g.nodes_[self].grad.at(r, offset + c);
                  }
                  offset += width;
                }
              });
}

Var Graph::mean(Var x, std::size_t axis) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "mean");
  LDN_REQUIRE(axis < 2, "mean: axis must be 0 or 1");
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor out({axis == 0 ? cols : rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[axis == 0 ? c : r] += xv.at(r, c);
  const double denom = static_cast<double>(axis == 0 ? rows : cols);
  for (double& v : out.data()) v /= denom;
  return push("mean", std::move(out), {x.id},
              [axis, denom](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const Tensor& go = g.nodes_[self].grad;
                for (std::size_t r = 0; r < gi.dim(0); ++r)
                  for (std::size_t c = 0; c < gi.dim(1); ++c)
                    gi.at(r, c) += go[axis == 0 ? c : r] / denom;
              });
}

Var Graph::mean_all(Var x) {
  const Tensor& xv = value(x);
  double total = 0.0;
  for (double v : xv.data()) total += v;
  const double n = static_cast<double>(xv.size());
  return push("mean_all", Tensor::scalar(total / n), {x.id},
              [n](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const double d = g.nodes_[self].grad[0] / n;
                for (double& v : gi.data()) v += d;
              });
}

Var Graph::sum_all(Var x) {
  const Tensor& xv = value(x);
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return push("sum_all", Tensor::scalar(total), {x.id},
              [](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const double d = g.nodes_[self].grad[0];
                for (double& v : gi.data()) v += d;
              });
}

Var Graph::segment_sum(Var x, std::span<const std::size_t> offsets) {
  const Tensor& xv = value(x);
  require_rank(xv, 2, "segment_sum");
  LDN_REQUIRE(offsets.size() >= 2 && offsets.front() == 0 &&
                  offsets.back() == xv.dim(0),
              "segment_sum: offsets must run from 0 to the row count");
  const std::size_t segments = offsets.size() - 1, cols = xv.dim(1);
  Tensor out({segments, cols});
  for (std::size_t s = 0; s < segments; ++s) {
    LDN_REQUIRE(offsets[s] < offsets[s + 1],
                "segment_sum: segments must be non-empty and increasing");
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.at(s, c) += xv.at(r, c);
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return push("segment_sum", std::move(out), {x.id},
              [offs = std::move(offs)](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const Tensor& go = g.nodes_[self].grad;
                const std::size_t cols = gi.dim(1);
                for (std::size_t s = 0; s + 1 < offs.size(); ++s)
                  for (std::size_t r = offs[s]; r < offs[s + 1]; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                      gi.at(r, c) += go.at(s, c);
              });
}

Var Graph::gather(Var x, std::vector<std::size_t> flat_indices) {
  const Tensor& xv = value(x);
  LDN_REQUIRE(!flat_indices.empty(), "gather: no indices");
  Tensor out({flat_indices.size()});
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    LDN_REQUIRE(flat_indices[i] < xv.size(), "gather: index out of range");
    out[i] = xv[flat_indices[i]];
  }
  return push("gather", std::move(out), {x.id},
              [idx = std::move(flat_indices)](Graph& g, std::size_t self) {
                Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
                const Tensor& go = g.nodes_[self].grad;
                for (std::size_t i = 0; i < idx.size(); ++i) gi[idx[i]] += go[i];
              });
}

Var Graph::pairwise_diff(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_rank(av, 1, "pairwise_diff");
  require_rank(bv, 1, "pairwise_diff");
  const std::size_t n = av.size(), m = bv.size();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = bv[j] - av[i];
  return push("pairwise_diff", std::move(out), {a.id, b.id},
              [](Graph& g, std::size_t self) {
                const auto ins = g.nodes_[self].inputs;
                const Tensor go = g.nodes_[self].grad;
                const std::size_t n = go.dim(0), m = go.dim(1);
                if (g.needs(ins[0])) {
                  Tensor& ga = g.grad_ref(ins[0]);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) ga[i] -= go.at(i, j);
                }
                if (g.needs(ins[1])) {
                  Tensor& gb = g.grad_ref(ins[1]);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) gb[j] += go.at(i, j);
                }
              });
}

Var Graph::mix_frames(Var coeffs, Var frames) {
  const Tensor& cv = value(coeffs);
  const Tensor& fv = value(frames);
  require_rank(cv, 2, "mix_frames coefficients");
  require_rank(fv, 3, "mix_frames frames");
  const std::size_t m = cv.dim(0), steps = cv.dim(1);
  const std::size_t batch = fv.dim(0), width = fv.dim(2);
  LDN_REQUIRE(fv.dim(1) == steps, "mix_frames: frame count " +
                                      std::to_string(fv.dim(1)) +
                                      " does not match coefficients " +
                                      shape_string(cv.shape()));
  Tensor out({batch, m * width});
  const auto& f = fv.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* o = &out.at(b, i * width);
      for (std::size_t t = 0; t < steps; ++t) {
        const double c = cv.at(i, t);
        if (c == 0.0) continue;
        const double* fr = &f[(b * steps + t) * width];
        for (std::size_t d = 0; d < width; ++d) o[d] += c * fr[d];
      }
    }
  }
  return push("mix_frames", std::move(out), {coeffs.id, frames.id},
              [](Graph& g, std::size_t self) {
                const auto ins = g.nodes_[self].inputs;
                const Tensor& go = g.nodes_[self].grad;
                const Tensor& cv = g.nodes_[ins[0]].value;
                const Tensor& fv = g.nodes_[ins[1]].value;
                const std::size_t m = cv.dim(0), steps = cv.dim(1);
                const std::size_t batch = fv.dim(0), width = fv.dim(2);
                if (g.needs(ins[0])) {
                  Tensor& gc = g.grad_ref(ins[0]);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t t = 0; t < steps; ++t) {
                        const double* fr = &fv[(b * steps + t) * width];
                        const double* gr = &go.at(b, i * width);
                        double acc = 0.0;
                        for (std::size_t d = 0; d < width; ++d) acc += gr[d] * fr[d];
                        gc.at(i, t) += acc;
                      }
                }
                if (g.needs(ins[1])) {
                  Tensor& gf = g.grad_ref(ins[1]);
                  for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t t = 0; t < steps; ++t) {
                        const double c = cv.at(i, t);
                        double* fr = &gf[(b * steps + t) * width];
                        const double* gr = &go.at(b, i * width);
                        for (std::size_t d = 0; d < width; ++d) fr[d] += c * gr[d];
                      }
                }
              });
}

Var Graph::reshape(Var x, Shape shape) {
  Tensor out = value(x).reshaped(std::move(shape));
  return push("reshape", std::move(out), {x.id}, [](Graph& g, std::size_t self) {
    Tensor& gi = g.grad_ref(g.nodes_[self].inputs[0]);
    const Tensor& go = g.nodes_[self].grad;
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
  });
}

// ---------------------------------------------------------------------------
// Reverse pass

void Graph::backward(Var loss) {
  const Node& root = node(loss);
  LDN_REQUIRE(root.value.size() == 1,
              "backward: loss must be scalar, got shape " +
                  shape_string(root.value.shape()));
  LDN_REQUIRE(!backward_done_, "backward: already run on this graph");
  backward_done_ = true;
  if (!root.requires_grad) return;
  grad_ref(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].grad.empty() || !nodes_[i].backward) continue;
    // Move the closure out so the node vector can be touched freely.
    BackwardFn fn = std::move(nodes_[i].backward);
    fn(*this, i);
    nodes_[i].backward = std::move(fn);
  }
}

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

std::map<std::string, Tensor> Graph::parameter_gradients() const {
  std::map<std::string, Tensor> out;
  for (const Node& n : nodes_) {
    if (!n.is_parameter) continue;
    Tensor g = n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad;
    auto [it, inserted] = out.emplace(n.name, g);
    if (!inserted) {
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
  return out;
}

}  // namespace ldn::diff
