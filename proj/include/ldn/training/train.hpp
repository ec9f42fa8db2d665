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

#ifndef LDN_TRAINING_TRAIN_HPP_
#define LDN_TRAINING_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldn/dataio/dataset.hpp"
#include "ldn/dataio/folds.hpp"
#include "ldn/diffcore/optim.hpp"
#include "ldn/lossmetrics/losses.hpp"
#include "ldn/lossmetrics/metrics.hpp"
#include "ldn/models/model.hpp"
#include "ldn/random.hpp"

namespace ldn::train {

using diff::Tensor;

enum class LossKind { kBce, kSoftRank, kHingeRank };
enum class LambdaMode { kPerBatch, kPerExample };
enum class TargetKind { kHard, kSoft };

struct TrainConfig {
  LossKind loss = LossKind::kBce;
  std::uint32_t epochs = 20;
  std::uint32_t batch_size = 64;
  diff::AdamConfig optimizer{.learning_rate = 1e-3};
  bool mixup = false;
  double mixup_alpha = 0.4;
  LambdaMode lambda_mode = LambdaMode::kPerBatch;
  std::uint64_t seed = 0;
  TargetKind targets = TargetKind::kHard;
  // Early stopping on held-out GAP against noisy labels; 0 disables it.
  std::uint32_t patience = 3;
  std::uint32_t gap_n = 20;
  loss::RankOptions rank;
};

const char* loss_name(LossKind kind);
void validate(const TrainConfig& config);
std::string canonical_text(const TrainConfig& config);
// Keys absent from text keep their value from base (or the defaults).
TrainConfig parse_train_config(const std::string& text, const TrainConfig* base = nullptr);

// Record id -> confidences over the vocabulary, rows in ids order.
struct SoftLabelMatrix {
  std::vector<std::string> ids;
  Tensor values;  // [N x L], every value in [0, 1]
  friend bool operator==(const SoftLabelMatrix&, const SoftLabelMatrix&) = default;
};

// out(i) = lambda(i) x(i) + (1 - lambda(i)) x(partner(i)) for each row
// (axis 0) of a tensor of any rank >= 1. An empty tensor is passed through.
Tensor mix_rows(const Tensor& x, std::span<const std::size_t> partner,
                std::span<const double> lambda);

struct MixupDraw {
  std::vector<std::size_t> partner;  // a permutation of the batch
  std::vector<double> lambda;        // one per row
};
// Partner permutation from rng, then lambda ~ Beta(alpha, alpha) once per
// batch or once per example. forced_lambda bypasses the draw.
MixupDraw draw_mixup(std::size_t batch_size, double alpha, Rng& rng, LambdaMode mode,
                     std::optional<double> forced_lambda = std::nullopt);

struct MixedBatch {
  models::Batch batch;
  Tensor targets;
};
// Mixes every dense feature field and the targets with one draw. Ragged
// frame inputs (VLAD) cannot be mixed.
MixedBatch mixup_batch(const models::Batch& batch, const Tensor& targets, double alpha, Rng& rng,
                       LambdaMode mode, std::optional<double> forced_lambda = std::nullopt);

struct EpochRecord {
  std::uint32_t fold = 0;
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> oof_gap;  // absent without a held-out set
};

struct FitResult {
  models::ModelParams model;
  std::vector<EpochRecord> history;
  std::optional<double> best_gap;
  std::uint32_t best_epoch = 0;
};

// Trains one model on table rows `train_rows` against target rows of the
// same index. With held-out rows the held-out GAP (against `heldout_truth`)
// is evaluated after every epoch; training stops after `patience`
// evaluations without improvement and the best parameters are returned.
// Batches of fewer than two rows are skipped, as are ranking-loss batches
// without a positive or without a negative.
FitResult fit_model(const models::ModelConfig& config, const TrainConfig& train,
                    const models::FeatureTable& table, const Tensor& targets,
                    std::span<const std::size_t> train_rows,
                    std::span<const std::size_t> heldout_rows,
                    const loss::GroundTruth* heldout_truth, std::uint64_t seed,
                    std::uint32_t fold_tag = 0);

struct TrainedCV {
  models::ModelConfig model_config;
  TrainConfig train_config;
  data::FoldSplit folds;
  std::vector<models::ModelParams> models;  // one per fold
  std::vector<std::string> ids;             // dataset order
  Tensor oof;                               // [N x L] out-of-fold probabilities
  std::vector<double> fold_gap;             // best held-out GAP per fold
  std::vector<EpochRecord> history;         // fold-major
  bool distilled = false;
};

// k-fold training. Folds run on up to `jobs` threads; each fold's result
// depends only on (seed, fold index), so the output is independent of jobs.
TrainedCV train_cv(const data::Dataset& dataset, const data::FoldSplit& folds,
                   const models::ModelConfig& config, const TrainConfig& train,
                   const SoftLabelMatrix* soft = nullptr, unsigned jobs = 1);

// Same loop on a precomputed feature table and explicit targets.
TrainedCV train_cv_table(const models::FeatureTable& table, const Tensor& targets,
                         const loss::GroundTruth& truth, const data::FoldSplit& folds,
                         const models::ModelConfig& config, const TrainConfig& train,
                         unsigned jobs = 1);

// Eval-mode predictions for the given table rows, in row order.
Tensor predict_rows(const models::ModelParams& m, const models::FeatureTable& table,
                    std::span<const std::size_t> rows);

// OOF GAP of a trained run against the given truth.
double oof_gap(const TrainedCV& run, const loss::GroundTruth& truth, std::size_t n = 20);

// Run directory: run.json, fold_<i>.model, oof.pred (every label, so the
// file is a full soft-label matrix), history.jsonl, folds.tsv.
void write_run(const std::filesystem::path& dir, const TrainedCV& run);
TrainedCV read_run(const std::filesystem::path& dir);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; the first
// exception (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ldn::train

#endif  // LDN_TRAINING_TRAIN_HPP_
