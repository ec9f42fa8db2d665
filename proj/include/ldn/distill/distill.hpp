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

#ifndef LDN_DISTILL_DISTILL_HPP_
#define LDN_DISTILL_DISTILL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldn/lossmetrics/metrics.hpp"
#include "ldn/training/train.hpp"

namespace ldn::distill {

using diff::Tensor;
using train::SoftLabelMatrix;
using train::TrainedCV;

// One full-coverage matrix per run, values clamped to [0, 1]. All runs must
// share one fold split.
std::vector<SoftLabelMatrix> oof_soft_labels(const std::vector<const TrainedCV*>& runs);
std::vector<SoftLabelMatrix> oof_soft_labels(const std::vector<TrainedCV>& runs);

struct EnsembleWeights {
  std::vector<double> weights;  // on the simplex
  double gap = 0.0;             // OOF GAP of the combination
  std::vector<double> singleton_gaps;
  std::uint32_t moves = 0;      // accepted weight transfers
};

// Weights live on a grid of 1/100. Search starts with all weight on the
// best single model (lowest index on ties), then repeatedly applies the
// pairwise transfer of 5 units with the largest GAP gain, then of 1 unit,
// accepting strict improvements only.
EnsembleWeights fit_ensemble_weights(const std::vector<SoftLabelMatrix>& matrices,
                                     const loss::GroundTruth& truth, std::size_t n = 20);

// Elementwise convex combination; results clamped to [0, 1].
SoftLabelMatrix combine(const std::vector<SoftLabelMatrix>& matrices,
                        const std::vector<double>& weights);

// train_cv on soft targets with BCE.
TrainedCV distill_student(const SoftLabelMatrix& soft, const data::Dataset& dataset,
                          const data::FoldSplit& folds, const models::ModelConfig& student,
                          const train::TrainConfig& train, unsigned jobs = 1);

// Penultimate activations of every record under each student's fold-f
// model, concatenated in student order: [records x sum of widths].
Tensor fold_penultimate(const std::vector<const TrainedCV*>& students, std::uint32_t fold,
                        const data::Dataset& dataset);

struct FinalModel {
  // Frozen feature extractors, one per student (that student's fold-0
  // model), and the head over their concatenated penultimate layers.
  std::vector<models::ModelParams> students;
  models::ModelParams head;
  // Cross-validated head predictions: fold f is scored by a head trained
  // on the other folds, all through the fold-f extractors.
  std::vector<std::string> ids;
  Tensor head_oof;
  double head_oof_gap = 0.0;  // against the training (noisy) labels
};

// Fold models of one student do not share a feature space, so the head is
// cross-validated per fold on the features of that fold's extractors. The
// deployed head is then trained on all records through the fold-0
// extractors for the mean number of epochs the folds kept.
FinalModel stack_penultimate(const std::vector<const TrainedCV*>& students,
                             const SoftLabelMatrix& soft, const data::Dataset& dataset,
                             const train::TrainConfig& head_train, unsigned jobs = 1);

// Probabilities of the deployed final model.
Tensor predict_final(const FinalModel& model, const data::Dataset& dataset);

// "LDNF" v1: magic, u32 version, u32 student count, then each student and
// the head as u64 length + LDNM bytes.
inline constexpr std::uint32_t kFinalFormatVersion = 1;
std::vector<std::uint8_t> encode_final(const FinalModel& model);
FinalModel decode_final(const std::vector<std::uint8_t>& bytes);
// Exact container size from the configs alone.
std::uint64_t final_size_bytes(const std::vector<models::ModelConfig>& students,
                               const models::ModelConfig& head);
std::uint64_t final_size_bytes(const FinalModel& model);

struct BudgetReport {
  bool pass = false;
  std::uint64_t bytes = 0;
  std::uint64_t budget = 0;
  std::vector<std::uint64_t> student_bytes;
  std::uint64_t head_bytes = 0;
};
BudgetReport budget_check(const FinalModel& model, std::uint64_t budget_bytes);
BudgetReport budget_check(const std::vector<models::ModelConfig>& students,
                          const models::ModelConfig& head, std::uint64_t budget_bytes);

// Head config for a list of students: input width is the sum of their
// penultimate widths.
models::ModelConfig stacking_head_config(const std::vector<models::ModelConfig>& students);

}  // namespace ldn::distill

#endif  // LDN_DISTILL_DISTILL_HPP_
