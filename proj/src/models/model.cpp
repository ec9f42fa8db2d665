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

#include "ldn/models/model.hpp"

#include <algorithm>
#include <cmath>

#include "ldn/dataio/binary.hpp"
#include "ldn/dataio/dataset.hpp"
#include "ldn/error.hpp"
#include "ldn/lossmetrics/losses.hpp"
#include "ldn/random.hpp"

namespace ldn::models {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'N', 'M'};

std::string block_name(const std::string& prefix, std::uint32_t i) {
  return prefix + "block" + std::to_string(i) + "/";
}

// Tensor layout of the residual MLP.
class LayoutBuilder {
 public:
  explicit LayoutBuilder(std::vector<TensorSpec>& out) : out_(out) {}

  void dense(const std::string& p, std::size_t in, std::size_t width) {
    out_.push_back({p + "W", {in, width}, TensorKind::kWeight, in});
    out_.push_back({p + "b", {width}, TensorKind::kBias});
  }
  void bn(const std::string& p, std::size_t width) {
    out_.push_back({p + "gamma", {width}, TensorKind::kGamma});
    out_.push_back({p + "beta", {width}, TensorKind::kBeta});
    out_.push_back({p + "running_mean", {width}, TensorKind::kRunningMean});
    out_.push_back({p + "running_var", {width}, TensorKind::kRunningVar});
  }
  void block(const std::string& p, std::size_t width) {
    dense(p + "fc1/", width, width);
    bn(p + "bn1/", width);
    dense(p + "fc2/", width, width);
    bn(p + "bn2/", width);
  }
  void resnet(const ResNetLikeConfig& c, const std::string& pre) {
    std::vector<std::pair<std::string, std::size_t>> branches;
    switch (c.modality) {
      case Modality::kBoth:
        branches = {{"video", c.video_dim}, {"audio", c.audio_dim}};
        break;
      case Modality::kVideoOnly:
        branches = {{"video", c.video_dim}};
        break;
      case Modality::kAudioOnly:
        branches = {{"audio", c.audio_dim}};
        break;
      case Modality::kFused:
        branches = {{"fused", c.fused_dim}};
        break;
    }
    if (c.use_frame_stats) branches.push_back({"stats", c.stats_dim()});
    for (const auto& [name, width] : branches) {
      const std::string p = pre + name + "/";
      dense(p + "stem/", width, c.inner_size);
      bn(p + "stem/bn/", c.inner_size);
      for (std::uint32_t i = 0; i < c.av_id_block_num; ++i) block(block_name(p, i), c.inner_size);
    }
    dense(pre + "proj/", branches.size() * c.inner_size, c.inner_size);
    bn(pre + "proj/bn/", c.inner_size);
    for (std::uint32_t i = 0; i < c.concat_id_block_num; ++i) {
      block(block_name(pre + "concat/", i), c.inner_size);
    }
    dense(pre + "out/", c.inner_size, c.vocabulary_size);
  }

 private:
  std::vector<TensorSpec>& out_;
};

// Graph construction over a bound ModelParams.
class Net {
 public:
  Net(Graph& g, const ModelParams& m) : g_(g), m_(m) {}

  Var p(const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    auto pit = m_.params.find(name);
    LDN_REQUIRE(pit != m_.params.end(), "model has no parameter '" + name + "'");
    return vars_[name] = g_.parameter(name, pit->second);
  }
  Var dense(Var x, const std::string& pre) { return g_.affine(x, p(pre + "W"), p(pre + "b")); }
  Var bn(Var x, const std::string& pre) {
    auto mit = m_.buffers.find(pre + "running_mean");
    auto vit = m_.buffers.find(pre + "running_var");
    LDN_REQUIRE(mit != m_.buffers.end() && vit != m_.buffers.end(),
                "model has no running statistics under '" + pre + "'");
    return g_.batch_norm(x, p(pre + "gamma"), p(pre + "beta"), pre, mit->second, vit->second);
  }
  Var act(Var x, Activation a) { return a == Activation::kRelu ? g_.relu(x) : g_.tanh(x); }

  Var block(Var h, const std::string& pre, const ResNetLikeConfig& c) {
    Var t = act(bn(dense(h, pre + "fc1/"), pre + "bn1/"), c.activation);
    t = g_.dropout(t, c.dropout_rate);
    t = bn(dense(t, pre + "fc2/"), pre + "bn2/");
    return act(g_.add(t, h), c.activation);
  }

  ForwardOutput resnet(const ResNetLikeConfig& c, const std::string& pre,
                       const std::vector<std::pair<std::string, Var>>& branches) {
    std::vector<Var> outs;
    for (const auto& [name, x] : branches) {
      const std::string bp = pre + name + "/";
      Var h = act(bn(dense(x, bp + "stem/"), bp + "stem/bn/"), c.activation);
      for (std::uint32_t i = 0; i < c.av_id_block_num; ++i) h = block(h, block_name(bp, i), c);
      outs.push_back(h);
    }
    Var h = outs.size() == 1 ? outs[0] : g_.concat(outs);
    h = act(bn(dense(h, pre + "proj/"), pre + "proj/bn/"), c.activation);
    for (std::uint32_t i = 0; i < c.concat_id_block_num; ++i) {
      h = block(h, block_name(pre + "concat/", i), c);
    }
    return {g_.sigmoid(dense(h, pre + "out/")), h, Var{}};
  }

  Graph& g() { return g_; }

 private:
  Graph& g_;
  const ModelParams& m_;
  std::map<std::string, Var> vars_;
};

void require_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  LDN_REQUIRE(t.rank() == 2 && t.dim(0) == rows && t.dim(1) == cols,
              std::string("batch ") + what + " must be [" + std::to_string(rows) + " x " +
                  std::to_string(cols) + "], got " + diff::shape_string(t.shape()));
}

template <typename... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <typename... F>
Overloaded(F...) -> Overloaded<F...>;

}  // namespace

std::vector<TensorSpec> tensor_layout(const ModelConfig& config) {
  validate(config);
  std::vector<TensorSpec> out;
  LayoutBuilder b(out);
  std::visit(Overloaded{[&](const ResNetLikeConfig& c) { b.resnet(c, ""); },
                        [&](const VladBowConfig& c) {
                          b.dense("vlad/", c.frame_dim, c.clusters);
                          out.push_back({"vlad/p", {1}, TensorKind::kPower});
                          b.resnet(c.head, "head/");
                        },
                        [&](const FrameMixConfig& c) {
                          out.push_back({"mix/C", {c.combinations, c.t_max}, TensorKind::kCoefficients});
                          b.resnet(c.head, "head/");
                        },
                        [&](const LinearHeadConfig& c) {
                          b.dense("linear/", c.input_dim, c.vocabulary_size);
                        }},
             config);
  return out;
}

std::uint64_t parameter_count(const ModelConfig& config) {
  std::uint64_t n = 0;
  for (const auto& t : tensor_layout(config)) {
    if (t.kind != TensorKind::kRunningMean && t.kind != TensorKind::kRunningVar) {
      n += diff::shape_size(t.shape);
    }
  }
  return n;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  ModelParams m;
  m.config = config;
  normalize(m.config);
  m.penultimate = penultimate_layer(m.config);
  const bool linear = std::holds_alternative<LinearHeadConfig>(m.config);
  for (const auto& spec : tensor_layout(m.config)) {
    Tensor t(spec.shape);
    switch (spec.kind) {
      case TensorKind::kWeight: {
        if (linear) break;
        Rng rng(Rng::derive(seed, spec.name));
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.fan_in));
        for (double& v : t.data()) v = rng.uniform(-limit, limit);
        break;
      }
      case TensorKind::kBias:
      case TensorKind::kBeta:
      case TensorKind::kRunningMean:
        break;
      case TensorKind::kGamma:
      case TensorKind::kRunningVar:
        t.fill(1.0);
        break;
      case TensorKind::kCoefficients:
        t.fill(1.0 / static_cast<double>(spec.shape[1]));
        break;
      case TensorKind::kPower:
        t.fill(std::get<VladBowConfig>(m.config).p0);
        break;
    }
    const bool buffer = spec.kind == TensorKind::kRunningMean || spec.kind == TensorKind::kRunningVar;
    (buffer ? m.buffers : m.params).emplace(spec.name, std::move(t));
  }
  return m;
}

ForwardOutput forward(Graph& g, const ModelParams& m, const Batch& batch) {
  LDN_REQUIRE(batch.size >= 1, "forward: empty batch");
  Net net(g, m);
  const std::size_t b = batch.size;
  return std::visit(
      Overloaded{
          [&](const ResNetLikeConfig& c) {
            std::vector<std::pair<std::string, Var>> branches;
            const bool video = c.modality == Modality::kBoth || c.modality == Modality::kVideoOnly;
            const bool audio = c.modality == Modality::kBoth || c.modality == Modality::kAudioOnly;
            if (c.modality == Modality::kFused) {
              require_matrix(batch.fused, b, c.fused_dim, "fused features");
              branches.push_back({"fused", g.input("fused", batch.fused)});
            }
            if (video) {
              require_matrix(batch.video, b, c.video_dim, "video features");
              branches.push_back({"video", g.input("video", batch.video)});
            }
            if (audio) {
              require_matrix(batch.audio, b, c.audio_dim, "audio features");
              branches.push_back({"audio", g.input("audio", batch.audio)});
            }
            if (c.use_frame_stats) {
              require_matrix(batch.stats, b, c.stats_dim(), "frame statistics");
              branches.push_back({"stats", g.input("stats", batch.stats)});
            }
            return net.resnet(c, "", branches);
          },
          [&](const VladBowConfig& c) {
            LDN_REQUIRE(batch.frame_offsets.size() == b + 1 && batch.frame_offsets.back() >= 1,
                        "forward: VLAD batch needs frame offsets for every record");
            require_matrix(batch.frames, batch.frame_offsets.back(), c.frame_dim, "frames");
            for (std::size_t i = 0; i < b; ++i) {
              LDN_REQUIRE(batch.frame_offsets[i] < batch.frame_offsets[i + 1],
                          "forward: every record needs at least one frame");
            }
            const Var x = g.input("frames", batch.frames);
            const Var y = g.power(g.relu(net.dense(x, "vlad/")), net.p("vlad/p"));
            const Var bow = g.segment_sum(g.softmax(y), batch.frame_offsets);
            ForwardOutput out = net.resnet(c.head, "head/", {{"fused", bow}});
            out.fused = bow;
            return out;
          },
          [&](const FrameMixConfig& c) {
            LDN_REQUIRE(batch.padded.rank() == 3 && batch.padded.dim(0) == b &&
                            batch.padded.dim(1) == c.t_max && batch.padded.dim(2) == c.frame_dim,
                        "forward: padded frames must be [B x T_max x D]");
            const Var fused = g.mix_frames(net.p("mix/C"), g.input("padded", batch.padded));
            ForwardOutput out = net.resnet(c.head, "head/", {{"fused", fused}});
            out.fused = fused;
            return out;
          },
          [&](const LinearHeadConfig& c) {
            require_matrix(batch.fused, b, c.input_dim, "head features");
            const Var x = g.input("fused", batch.fused);
            return ForwardOutput{g.sigmoid(net.dense(x, "linear/")), x, x};
          }},
      m.config);
}

Tensor predict(const ModelParams& m, const Batch& batch) {
  Graph g(diff::Mode::kEval);
  return g.value(forward(g, m, batch).probabilities);
}

Tensor penultimate_features(const ModelParams& m, const Batch& batch) {
  Graph g(diff::Mode::kEval);
  return g.value(forward(g, m, batch).penultimate);
}

namespace {

Tensor run_all(const ModelParams& m, const FeatureTable& table, std::size_t batch_size,
               bool penultimate) {
  LDN_REQUIRE(table.rows() >= 1 && batch_size >= 1, "predict: empty table or batch size");
  const std::size_t width =
      penultimate ? penultimate_width(m.config) : vocabulary_size(m.config);
  Tensor out({table.rows(), width});
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < table.rows(); start += batch_size) {
    rows.clear();
    for (std::size_t i = start; i < std::min(table.rows(), start + batch_size); ++i) rows.push_back(i);
    const Batch b = make_batch(table, rows);
    const Tensor part = penultimate ? penultimate_features(m, b) : predict(m, b);
    std::copy(part.data().begin(), part.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(start * width));
  }
  return out;
}

}  // namespace

Tensor predict_all(const ModelParams& m, const FeatureTable& table, std::size_t batch_size) {
  return run_all(m, table, batch_size, false);
}

Tensor penultimate_all(const ModelParams& m, const FeatureTable& table, std::size_t batch_size) {
  return run_all(m, table, batch_size, true);
}

std::vector<std::uint8_t> encode_model(const ModelParams& m) {
  data::ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kModelFormatVersion);
  const std::string tag = architecture_tag(m.config);
  const std::string text = canonical_text(m.config);
  w.u32(static_cast<std::uint32_t>(tag.size()));
  w.text(tag);
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.text(text);
  std::map<std::string, const Tensor*> all;
  for (const auto& [k, v] : m.params) all[k] = &v;
  for (const auto& [k, v] : m.buffers) {
    LDN_REQUIRE(all.emplace(k, &v).second, "model: '" + k + "' is both parameter and buffer");
  }
  w.u32(static_cast<std::uint32_t>(all.size()));
  for (const auto& [name, t] : all) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.text(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t e : t->shape()) w.u64(e);
    for (double v : t->data()) w.f64(v);
  }
  return w.take();
}

ModelParams decode_model(const std::vector<std::uint8_t>& bytes) {
  data::ByteReader r(bytes.data(), bytes.size(), "model file");
  if (r.text(4) != std::string(kMagic, 4)) r.fail("bad magic (expected LDNM)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    r.fail("unsupported version " + std::to_string(version) + " (expected " +
           std::to_string(kModelFormatVersion) + ")");
  }
  const std::string tag = r.text(r.u32());
  const std::string text = r.text(r.u32());
  ModelParams m;
  try {
    m.config = parse_model_config(text);
  } catch (const InputError& e) {
    throw FormatError(std::string("model file: bad config text: ") + e.what());
  }
  if (architecture_tag(m.config) != tag) r.fail("architecture tag '" + tag + "' contradicts config");
  m.penultimate = penultimate_layer(m.config);

  std::map<std::string, TensorSpec> layout;
  for (auto& spec : tensor_layout(m.config)) layout.emplace(spec.name, spec);
  const std::uint32_t count = r.u32();
  if (count != layout.size()) {
    r.fail("tensor count " + std::to_string(count) + " does not match the architecture (" +
           std::to_string(layout.size()) + ")");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.text(r.u32());
    auto it = layout.find(name);
    if (it == layout.end()) r.fail("unexpected tensor '" + name + "'");
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& e : shape) e = r.u64();
    if (shape != it->second.shape) {
      r.fail("tensor '" + name + "' has shape " + diff::shape_string(shape) + ", expected " +
             diff::shape_string(it->second.shape));
    }
    Tensor t(shape);
    for (double& v : t.data()) v = r.f64();
    const bool buffer = it->second.kind == TensorKind::kRunningMean ||
                        it->second.kind == TensorKind::kRunningVar;
    if (!(buffer ? m.buffers : m.params).emplace(name, std::move(t)).second) {
      r.fail("duplicate tensor '" + name + "'");
    }
  }
  if (!r.at_end()) r.fail("trailing bytes after the last tensor");
  return m;
}

void serialize_model(const ModelParams& m, const std::filesystem::path& path) {
  data::write_file_bytes(path, encode_model(m));
}

ModelParams deserialize_model(const std::filesystem::path& path) {
  return decode_model(data::read_file_bytes(path));
}

std::uint64_t size_bytes(const ModelConfig& config) {
  std::uint64_t n = 4 + 4;
  n += 4 + architecture_tag(config).size();
  n += 4 + canonical_text(config).size();
  n += 4;
  for (const auto& t : tensor_layout(config)) {
    n += 4 + t.name.size() + 4 + 8 * t.shape.size() + 8 * diff::shape_size(t.shape);
  }
  return n;
}

GradcheckReport gradcheck(const ModelConfig& raw, std::uint64_t seed, std::size_t max_coordinates) {
  ModelConfig config = raw;
  normalize(config);
  // Dropout off; the check runs in eval mode anyway.
  std::visit(Overloaded{[](ResNetLikeConfig& c) { c.dropout_rate = 0.0; },
                        [](VladBowConfig& c) { c.head.dropout_rate = 0.0; },
                        [](FrameMixConfig& c) { c.head.dropout_rate = 0.0; },
                        [](LinearHeadConfig&) {}},
             config);
  ModelParams m = init_model(config, seed);
  Rng rng(Rng::derive(seed, "gradcheck"));
  // Move every tensor off its structured initial value so that no
  // coordinate sits at a symmetric point.
  for (auto& [name, t] : m.params) {
    for (double& v : t.data()) {
      if (name == "vlad/p") {
        v = rng.uniform(0.8, 1.6);
      } else {
        v += rng.normal(0.0, 0.2);
      }
    }
  }
  for (auto& [name, t] : m.buffers) {
    const bool var = name.size() >= 11 && name.compare(name.size() - 11, 11, "running_var") == 0;
    for (double& v : t.data()) v = var ? rng.uniform(0.5, 1.5) : rng.normal(0.0, 0.2);
  }

  Batch batch;
  batch.size = 2;
  auto random = [&](Shape shape) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.normal();
    return t;
  };
  std::visit(Overloaded{[&](const ResNetLikeConfig& c) {
                          if (c.modality == Modality::kFused) batch.fused = random({2, c.fused_dim});
                          if (c.video_dim) batch.video = random({2, c.video_dim});
                          if (c.audio_dim) batch.audio = random({2, c.audio_dim});
                          if (c.use_frame_stats) batch.stats = random({2, c.stats_dim()});
                        },
                        [&](const VladBowConfig& c) {
                          batch.frames = random({5, c.frame_dim});
                          batch.frame_offsets = {0, 3, 5};
                        },
                        [&](const FrameMixConfig& c) {
                          batch.padded = random({2, c.t_max, c.frame_dim});
                        },
                        [&](const LinearHeadConfig& c) { batch.fused = random({2, c.input_dim}); }},
             config);
  const std::size_t vocab = vocabulary_size(config);
  Tensor targets({2, vocab});
  for (double& v : targets.data()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;

  auto loss_of = [&](const ModelParams& params) {
    Graph g(diff::Mode::kEval);
    return g.value(loss::bce(g, forward(g, params, batch).probabilities, targets)).item();
  };

  Graph g(diff::Mode::kEval);
  const Var loss = loss::bce(g, forward(g, m, batch).probabilities, targets);
  g.backward(loss);
  const TensorMap grads = g.parameter_gradients();

  GradcheckReport report;
  report.architecture = architecture_tag(config);
  const double h = 1e-5;
  for (auto& [name, value] : m.params) {
    auto git = grads.find(name);
    LDN_REQUIRE(git != grads.end(), "gradcheck: parameter '" + name + "' has no gradient");
    std::vector<std::size_t> coords(value.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (max_coordinates > 0 && coords.size() > max_coordinates) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(max_coordinates);
      std::sort(coords.begin(), coords.end());
    }
    double worst = 0.0;
    for (std::size_t i : coords) {
      const double x0 = value[i];
      value[i] = x0 + h;
      const double up = loss_of(m);
      value[i] = x0 - h;
      const double down = loss_of(m);
      value[i] = x0;
      const double numeric = (up - down) / (2 * h);
      const double analytic = git->second[i];
      worst = std::max(worst, diff::max_relative_error(Tensor::scalar(analytic),
                                                       Tensor::scalar(numeric)));
    }
    report.entries.push_back({name, coords.size(), worst});
    report.max_relative_error = std::max(report.max_relative_error, worst);
  }
  return report;
}

}  // namespace ldn::models
