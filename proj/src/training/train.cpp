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

#include "ldn/training/train.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ldn/config_text.hpp"
#include "ldn/dataio/predictions.hpp"
#include "ldn/error.hpp"

namespace ldn::train {
namespace {

using models::Batch;
using models::FeatureTable;
using models::ModelParams;

const std::vector<std::string> kLosses = {"bce", "soft_rank", "hinge_rank"};
const std::vector<std::string> kLambdaModes = {"per_batch", "per_example"};
const std::vector<std::string> kTargets = {"hard", "soft"};
const std::vector<std::string> kScopes = {"batch", "per_sample"};

bool is_ranking(LossKind k) { return k != LossKind::kBce; }

Tensor take_rows(const Tensor& m, std::span<const std::size_t> rows) {
  const std::size_t cols = m.dim(1);
  Tensor out({rows.size(), cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(m.row(rows[i]).begin(), cols, out.row(i).begin());
  }
  return out;
}

bool has_positive_and_negative(const Tensor& labels) {
  bool pos = false, neg = false;
  for (double v : labels.data()) (v == 1.0 ? pos : neg) = true;
  return pos && neg;
}

double heldout_gap(const ModelParams& m, const FeatureTable& table,
                   std::span<const std::size_t> rows, const loss::GroundTruth& truth,
                   std::size_t n) {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r : rows) ids.push_back(table.ids[r]);
  return loss::gap_at_n(predict_rows(m, table, rows), ids, truth, n);
}

}  // namespace

Tensor predict_rows(const ModelParams& m, const FeatureTable& table,
                    std::span<const std::size_t> rows) {
  const std::size_t vocab = models::vocabulary_size(m.config);
  Tensor out({rows.size(), vocab});
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < rows.size(); start += kChunk) {
    const auto chunk = rows.subspan(start, std::min(kChunk, rows.size() - start));
    const Tensor p = models::predict(m, models::make_batch(table, chunk));
    std::copy(p.data().begin(), p.data().end(), out.row(start).begin());
  }
  return out;
}

const char* loss_name(LossKind kind) { return kLosses[static_cast<std::size_t>(kind)].c_str(); }

void validate(const TrainConfig& c) {
  LDN_REQUIRE(c.epochs >= 1, "train config: epochs must be >= 1");
  LDN_REQUIRE(c.batch_size >= 1, "train config: batch_size must be >= 1");
  LDN_REQUIRE(c.optimizer.learning_rate > 0.0, "train config: learning_rate must be > 0");
  LDN_REQUIRE(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0 && c.optimizer.beta2 >= 0.0 &&
                  c.optimizer.beta2 < 1.0,
              "train config: Adam betas must lie in [0, 1)");
  LDN_REQUIRE(c.optimizer.epsilon > 0.0, "train config: epsilon must be > 0");
  LDN_REQUIRE(c.optimizer.warmup_steps >= 0, "train config: warmup_steps must be >= 0");
  LDN_REQUIRE(c.gap_n >= 1, "train config: gap_n must be >= 1");
  if (c.mixup) {
    LDN_REQUIRE(c.mixup_alpha > 0.0, "train config: mixup_alpha must be > 0");
    LDN_REQUIRE(c.batch_size >= 2, "train config: mixup needs batch_size >= 2");
    LDN_REQUIRE(!is_ranking(c.loss), "train config: mixup targets are soft, ranking losses "
                                     "need binary labels");
  }
  if (is_ranking(c.loss)) {
    LDN_REQUIRE(c.targets == TargetKind::kHard,
                "train config: ranking losses train on hard labels only");
    LDN_REQUIRE(c.rank.top_k_neg >= 1, "train config: rank_top_k_neg must be >= 1");
  }
}

std::string canonical_text(const TrainConfig& c) {
  KeyWriter w;
  w.put("loss", kLosses[static_cast<std::size_t>(c.loss)]);
  w.put("epochs", c.epochs);
  w.put("batch_size", c.batch_size);
  w.put("learning_rate", c.optimizer.learning_rate);
  w.put("beta1", c.optimizer.beta1);
  w.put("beta2", c.optimizer.beta2);
  w.put("epsilon", c.optimizer.epsilon);
  w.put("warmup_steps", c.optimizer.warmup_steps);
  w.put("mixup", c.mixup);
  w.put("mixup_alpha", c.mixup_alpha);
  w.put("lambda_mode", kLambdaModes[static_cast<std::size_t>(c.lambda_mode)]);
  w.put("seed", c.seed);
  w.put("targets", kTargets[static_cast<std::size_t>(c.targets)]);
  w.put("patience", c.patience);
  w.put("gap_n", c.gap_n);
  w.put("rank_top_k_neg", static_cast<std::uint64_t>(c.rank.top_k_neg));
  w.put("rank_scope", kScopes[static_cast<std::size_t>(c.rank.scope)]);
  w.put("rank_margin", c.rank.margin);
  return w.text();
}

TrainConfig parse_train_config(const std::string& text, const TrainConfig* base) {
  TrainConfig c = base ? *base : TrainConfig{};
  KeyReader r(parse_key_values(text, "train config"), "train config");
  std::size_t idx = static_cast<std::size_t>(c.loss);
  r.read_choice("loss", kLosses, idx);
  c.loss = static_cast<LossKind>(idx);
  r.read("epochs", c.epochs);
  r.read("batch_size", c.batch_size);
  r.read("learning_rate", c.optimizer.learning_rate);
  r.read("beta1", c.optimizer.beta1);
  r.read("beta2", c.optimizer.beta2);
  r.read("epsilon", c.optimizer.epsilon);
  r.read("warmup_steps", c.optimizer.warmup_steps);
  r.read("mixup", c.mixup);
  r.read("mixup_alpha", c.mixup_alpha);
  idx = static_cast<std::size_t>(c.lambda_mode);
  r.read_choice("lambda_mode", kLambdaModes, idx);
  c.lambda_mode = static_cast<LambdaMode>(idx);
  r.read("seed", c.seed);
  idx = static_cast<std::size_t>(c.targets);
  r.read_choice("targets", kTargets, idx);
  c.targets = static_cast<TargetKind>(idx);
  r.read("patience", c.patience);
  r.read("gap_n", c.gap_n);
  std::uint64_t k = c.rank.top_k_neg;
  r.read("rank_top_k_neg", k);
  c.rank.top_k_neg = static_cast<std::size_t>(k);
  idx = static_cast<std::size_t>(c.rank.scope);
  r.read_choice("rank_scope", kScopes, idx);
  c.rank.scope = static_cast<loss::PairScope>(idx);
  r.read("rank_margin", c.rank.margin);
  r.finish();
  validate(c);
  return c;
}

Tensor mix_rows(const Tensor& x, std::span<const std::size_t> partner,
                std::span<const double> lambda) {
  if (x.empty()) return x;
  const std::size_t b = x.dim(0);
  LDN_REQUIRE(partner.size() == b && lambda.size() == b, "mix_rows: draw does not match batch");
  const std::size_t stride = x.size() / b;
  Tensor out(x.shape());
  const auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t j = partner[i];
    LDN_REQUIRE(j < b, "mix_rows: partner index out of range");
    const double l = lambda[i];
    for (std::size_t c = 0; c < stride; ++c) {
      dst[i * stride + c] = l * src[i * stride + c] + (1.0 - l) * src[j * stride + c];
    }
  }
  return out;
}

MixupDraw draw_mixup(std::size_t batch_size, double alpha, Rng& rng, LambdaMode mode,
                     std::optional<double> forced_lambda) {
  LDN_REQUIRE(batch_size >= 2, "mixup: batch size must be >= 2");
  LDN_REQUIRE(forced_lambda || alpha > 0.0, "mixup: alpha must be > 0");
  MixupDraw d;
  d.partner.resize(batch_size);
  std::iota(d.partner.begin(), d.partner.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(d.partner));
  d.lambda.resize(batch_size);
  if (forced_lambda) {
    std::fill(d.lambda.begin(), d.lambda.end(), *forced_lambda);
  } else if (mode == LambdaMode::kPerBatch) {
    std::fill(d.lambda.begin(), d.lambda.end(), rng.beta(alpha, alpha));
  } else {
    for (double& l : d.lambda) l = rng.beta(alpha, alpha);
  }
  return d;
}

MixedBatch mixup_batch(const Batch& batch, const Tensor& targets, double alpha, Rng& rng,
                       LambdaMode mode, std::optional<double> forced_lambda) {
  LDN_REQUIRE(batch.size >= 2, "mixup: batch size must be >= 2");
  LDN_REQUIRE(batch.frame_offsets.empty(), "mixup: ragged frame inputs cannot be mixed");
  LDN_REQUIRE(targets.rank() == 2 && targets.dim(0) == batch.size,
              "mixup: targets do not match batch");
  const MixupDraw d = draw_mixup(batch.size, alpha, rng, mode, forced_lambda);
  MixedBatch out;
  out.batch.size = batch.size;
  out.batch.video = mix_rows(batch.video, d.partner, d.lambda);
  out.batch.audio = mix_rows(batch.audio, d.partner, d.lambda);
  out.batch.stats = mix_rows(batch.stats, d.partner, d.lambda);
  out.batch.fused = mix_rows(batch.fused, d.partner, d.lambda);
  out.batch.padded = mix_rows(batch.padded, d.partner, d.lambda);
  out.targets = mix_rows(targets, d.partner, d.lambda);
  return out;
}

FitResult fit_model(const models::ModelConfig& config, const TrainConfig& train,
                    const FeatureTable& table, const Tensor& targets,
                    std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> heldout_rows,
                    const loss::GroundTruth* heldout_truth, std::uint64_t seed,
                    std::uint32_t fold_tag) {
  validate(train);
  LDN_REQUIRE(!train_rows.empty(), "fit_model: no training rows");
  LDN_REQUIRE(targets.rank() == 2 && targets.dim(0) == table.rows() &&
                  targets.dim(1) == models::vocabulary_size(config),
              "fit_model: targets must be [records x vocabulary]");
  if (train.mixup) {
    LDN_REQUIRE(!std::holds_alternative<models::VladBowConfig>(config),
                "fit_model: mixup is not defined for VLAD-BOW inputs");
  }

  FitResult result;
  result.model = models::init_model(config, Rng::derive(seed, "init"));
  ModelParams& m = result.model;
  diff::AdamState state;
  state.config = train.optimizer;
  Rng order_rng(Rng::derive(seed, "shuffle"));
  Rng mix_rng(Rng::derive(seed, "mixup"));

  // Held-out truth restricted to the held-out ids so M counts only them.
  loss::GroundTruth truth;
  const bool evaluate = heldout_truth && !heldout_rows.empty();
  std::size_t heldout_positives = 0;
  if (evaluate) {
    for (std::size_t r : heldout_rows) {
      const auto it = heldout_truth->find(table.ids[r]);
      LDN_REQUIRE(it != heldout_truth->end(), "fit_model: no truth for '" + table.ids[r] + "'");
      truth.insert(*it);
      heldout_positives += it->second.size();
    }
  }

  std::vector<std::size_t> order(train_rows.begin(), train_rows.end());
  std::optional<ModelParams> best;
  std::uint32_t stale = 0;
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 1; epoch <= train.epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::span<const std::size_t> rows(
          order.data() + start, std::min<std::size_t>(train.batch_size, order.size() - start));
      if (rows.size() < 2) continue;
      Batch batch = models::make_batch(table, rows);
      Tensor y = take_rows(targets, rows);
      if (is_ranking(train.loss) && !has_positive_and_negative(y)) continue;
      if (train.mixup) {
        MixedBatch mixed = mixup_batch(batch, y, train.mixup_alpha, mix_rng, train.lambda_mode);
        batch = std::move(mixed.batch);
        y = std::move(mixed.targets);
      }
      ++step;
      diff::Graph g(diff::Mode::kTrain, Rng::derive(seed, "dropout", step));
      const auto out = models::forward(g, m, batch);
      diff::Var l;
      switch (train.loss) {
        case LossKind::kBce: l = loss::bce(g, out.probabilities, y); break;
        case LossKind::kSoftRank: l = loss::soft_rank_loss(g, out.probabilities, y, train.rank); break;
        case LossKind::kHingeRank:
          l = loss::hinge_rank_loss(g, out.probabilities, y, train.rank);
          break;
      }
      loss_sum += g.value(l).item();
      ++batches;
      g.backward(l);
      diff::adam_step(m.params, g.parameter_gradients(), state);
      for (const auto& [name, value] : g.buffer_updates()) m.buffers[name] = value;
    }
    EpochRecord rec;
    rec.fold = fold_tag;
    rec.epoch = epoch;
    rec.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    if (evaluate && heldout_positives > 0) {
      const double gap = heldout_gap(m, table, heldout_rows, truth, train.gap_n);
      rec.oof_gap = gap;
      if (!result.best_gap || gap > *result.best_gap) {
        result.best_gap = gap;
        result.best_epoch = epoch;
        best = m;
        stale = 0;
      } else {
        ++stale;
      }
    }
    result.history.push_back(rec);
    if (train.patience > 0 && stale >= train.patience) break;
  }
  if (best && train.patience > 0) result.model = std::move(*best);
  return result;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

TrainedCV train_cv_table(const FeatureTable& table, const Tensor& targets,
                         const loss::GroundTruth& truth, const data::FoldSplit& folds,
                         const models::ModelConfig& config, const TrainConfig& train,
                         unsigned jobs) {
  validate(train);
  models::validate(config);
  LDN_REQUIRE(folds.ids == table.ids, "train_cv: folds do not match the records");
  LDN_REQUIRE(folds.k >= 2, "train_cv: need at least 2 folds");
  TrainedCV run;
  run.model_config = config;
  run.train_config = train;
  run.folds = folds;
  run.ids = table.ids;
  run.models.resize(folds.k);
  run.fold_gap.assign(folds.k, 0.0);
  run.oof = Tensor({table.rows(), models::vocabulary_size(config)});
  std::vector<std::vector<EpochRecord>> histories(folds.k);

  parallel_for(folds.k, jobs, [&](std::size_t f) {
    const auto fold = static_cast<std::uint32_t>(f);
    const std::vector<std::size_t> train_rows = folds.complement(fold);
    const std::vector<std::size_t> held = folds.members(fold);
    FitResult fit = fit_model(config, train, table, targets, train_rows, held, &truth,
                              Rng::derive(train.seed, "fold", f), fold);
    const Tensor p = predict_rows(fit.model, table, held);
    // Each fold writes only its own rows.
    for (std::size_t i = 0; i < held.size(); ++i) {
      std::copy(p.row(i).begin(), p.row(i).end(), run.oof.row(held[i]).begin());
    }
    run.fold_gap[f] = fit.best_gap.value_or(0.0);
    histories[f] = std::move(fit.history);
    run.models[f] = std::move(fit.model);
  });
  for (auto& h : histories) run.history.insert(run.history.end(), h.begin(), h.end());
  return run;
}

TrainedCV train_cv(const data::Dataset& dataset, const data::FoldSplit& folds,
                   const models::ModelConfig& config, const TrainConfig& train,
                   const SoftLabelMatrix* soft, unsigned jobs) {
  validate(train);
  folds.check_matches(dataset);
  models::ModelConfig bound = config;
  models::bind_dims(bound, dataset.vocabulary_size, dataset.video_dim, dataset.audio_dim);
  Tensor targets;
  if (train.targets == TargetKind::kSoft) {
    LDN_REQUIRE(soft != nullptr, "train_cv: soft targets selected but no soft labels given");
    LDN_REQUIRE(soft->ids == folds.ids, "train_cv: soft labels do not cover the records in order");
    LDN_REQUIRE(soft->values.rank() == 2 && soft->values.dim(0) == dataset.records.size() &&
                    soft->values.dim(1) == dataset.vocabulary_size,
                "train_cv: soft labels must be [records x vocabulary]");
    for (double v : soft->values.data()) {
      LDN_REQUIRE(v >= 0.0 && v <= 1.0, "train_cv: soft label outside [0, 1]");
    }
    targets = soft->values;
  } else {
    LDN_REQUIRE(soft == nullptr, "train_cv: soft labels given but hard targets selected");
    targets = data::label_matrix(dataset);
  }
  const FeatureTable table = models::prepare_features(dataset, bound);
  TrainedCV run = train_cv_table(table, targets, loss::ground_truth(dataset), folds, bound, train, jobs);
  run.distilled = soft != nullptr;
  return run;
}

double oof_gap(const TrainedCV& run, const loss::GroundTruth& truth, std::size_t n) {
  return loss::gap_at_n(run.oof, run.ids, truth, n);
}

void write_run(const std::filesystem::path& dir, const TrainedCV& run) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["architecture"] = models::architecture_tag(run.model_config);
  meta["model_config"] = models::canonical_text(run.model_config);
  meta["train_config"] = canonical_text(run.train_config);
  meta["folds"] = run.folds.k;
  meta["records"] = run.ids.size();
  meta["fold_gap"] = run.fold_gap;
  meta["distilled"] = run.distilled;
  {
    std::ofstream out(dir / "run.json", std::ios::binary);
    out << meta.dump(2) << "\n";
    if (!out) throw InputError("cannot write '" + (dir / "run.json").string() + "'");
  }
  for (std::size_t f = 0; f < run.models.size(); ++f) {
    models::serialize_model(run.models[f], dir / ("fold_" + std::to_string(f) + ".model"));
  }
  data::write_predictions(dir / "oof.pred", data::top_n(run.ids, run.oof, run.oof.dim(1)));
  data::write_folds(dir / "folds.tsv", run.folds);
  std::ofstream hist(dir / "history.jsonl", std::ios::binary);
  for (const auto& h : run.history) {
    nlohmann::ordered_json j;
    j["fold"] = h.fold;
    j["epoch"] = h.epoch;
    j["train_loss"] = h.train_loss;
    j["oof_gap"] = h.oof_gap ? nlohmann::ordered_json(*h.oof_gap) : nlohmann::ordered_json();
    hist << j.dump() << "\n";
  }
  if (!hist) throw InputError("cannot write '" + (dir / "history.jsonl").string() + "'");
}

TrainedCV read_run(const std::filesystem::path& dir) {
  const auto bytes = data::read_file_bytes(dir / "run.json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("run.json: " + std::string(e.what()));
  }
  TrainedCV run;
  try {
    run.model_config = models::parse_model_config(meta.at("model_config").get<std::string>());
    run.train_config = parse_train_config(meta.at("train_config").get<std::string>());
    run.fold_gap = meta.at("fold_gap").get<std::vector<double>>();
    run.distilled = meta.at("distilled").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("run.json: " + std::string(e.what()));
  }
  run.folds = data::read_folds(dir / "folds.tsv");
  run.ids = run.folds.ids;
  for (std::uint32_t f = 0; f < run.folds.k; ++f) {
    run.models.push_back(models::deserialize_model(dir / ("fold_" + std::to_string(f) + ".model")));
  }
  run.oof = data::predictions_to_matrix(data::read_predictions(dir / "oof.pred"), run.ids,
                                        models::vocabulary_size(run.model_config));
  std::ifstream hist(dir / "history.jsonl");
  std::string line;
  while (std::getline(hist, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EpochRecord r;
      r.fold = j.at("fold").get<std::uint32_t>();
      r.epoch = j.at("epoch").get<std::uint32_t>();
      r.train_loss = j.at("train_loss").get<double>();
      if (!j.at("oof_gap").is_null()) r.oof_gap = j.at("oof_gap").get<double>();
      run.history.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("history.jsonl: " + std::string(e.what()));
    }
  }
  return run;
}

}  // namespace ldn::train
