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

#include "ldn/distill/distill.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ldn/error.hpp"

namespace ldn::distill {
namespace {

constexpr int kUnits = 100;
constexpr char kMagic[4] = {'L', 'D', 'N', 'F'};

void check_aligned(const std::vector<SoftLabelMatrix>& m) {
  LDN_REQUIRE(!m.empty(), "ensemble: no prediction matrices");
  for (const auto& x : m) {
    LDN_REQUIRE(x.ids == m[0].ids, "ensemble: matrices cover different records");
    LDN_REQUIRE(x.values.shape() == m[0].values.shape() && x.values.rank() == 2,
                "ensemble: matrices have different shapes");
  }
}

Tensor combine_units(const std::vector<SoftLabelMatrix>& m, const std::vector<int>& units) {
  Tensor out(m[0].values.shape());
  auto dst = out.data();
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (units[k] == 0) continue;
    const double w = units[k] / static_cast<double>(kUnits);
    const auto src = m[k].values.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
  }
  for (double& v : dst) v = std::clamp(v, 0.0, 1.0);
  return out;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint64_t uint(int bytes) {
    need(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += bytes;
    return v;
  }
  std::vector<std::uint8_t> block(std::uint64_t n) {
    need(n);
    std::vector<std::uint8_t> out(b_.begin() + pos_, b_.begin() + pos_ + n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (b_.size() - pos_ < n)
      throw FormatError("final model: truncated at byte offset " + std::to_string(pos_));
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<SoftLabelMatrix> oof_soft_labels(const std::vector<const TrainedCV*>& runs) {
  LDN_REQUIRE(!runs.empty(), "oof_soft_labels: no runs");
  std::vector<SoftLabelMatrix> out;
  for (const TrainedCV* r : runs) {
    LDN_REQUIRE(r->folds == runs[0]->folds, "oof_soft_labels: runs use different fold splits");
    LDN_REQUIRE(r->oof.rank() == 2 && r->oof.dim(0) == r->ids.size(),
                "oof_soft_labels: incomplete out-of-fold matrix");
    SoftLabelMatrix m{r->ids, r->oof};
    for (double& v : m.values.data()) v = std::clamp(v, 0.0, 1.0);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<SoftLabelMatrix> oof_soft_labels(const std::vector<TrainedCV>& runs) {
  std::vector<const TrainedCV*> p;
  for (const auto& r : runs) p.push_back(&r);
  return oof_soft_labels(p);
}

EnsembleWeights fit_ensemble_weights(const std::vector<SoftLabelMatrix>& m,
                                     const loss::GroundTruth& truth, std::size_t n) {
  check_aligned(m);
  const std::size_t k = m.size();
  auto gap_of = [&](const std::vector<int>& units) {
    return loss::gap_at_n(combine_units(m, units), m[0].ids, truth, n);
  };
  EnsembleWeights result;
  std::vector<int> units(k, 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < k; ++i) {
    // A singleton's combination is exactly its clamped matrix.
    std::vector<int> u(k, 0);
    u[i] = kUnits;
    result.singleton_gaps.push_back(gap_of(u));
    if (result.singleton_gaps[i] > result.singleton_gaps[best]) best = i;
  }
  units[best] = kUnits;
  double current = result.singleton_gaps[best];
  for (int step : {5, 1}) {
    for (;;) {
      double best_gain_gap = current;
      std::size_t from = k, to = k;
      for (std::size_t i = 0; i < k; ++i) {
        if (units[i] < step) continue;
        for (std::size_t j = 0; j < k; ++j) {
          if (j == i) continue;
          units[i] -= step;
          units[j] += step;
          const double g = gap_of(units);
          units[i] += step;
          units[j] -= step;
          if (g > best_gain_gap) {
            best_gain_gap = g;
            from = i;
            to = j;
          }
        }
      }
      if (from == k) break;
      units[from] -= step;
      units[to] += step;
      current = best_gain_gap;
      ++result.moves;
    }
  }
  for (int u : units) result.weights.push_back(u / static_cast<double>(kUnits));
  result.gap = current;
  return result;
}

SoftLabelMatrix combine(const std::vector<SoftLabelMatrix>& m, const std::vector<double>& weights) {
  check_aligned(m);
  LDN_REQUIRE(weights.size() == m.size(), "combine: one weight per matrix required");
  double sum = 0.0;
  for (double w : weights) {
    LDN_REQUIRE(w >= 0.0 && std::isfinite(w), "combine: weights must be non-negative");
    sum += w;
  }
  LDN_REQUIRE(std::abs(sum - 1.0) <= 1e-9, "combine: weights must sum to 1");
  SoftLabelMatrix out{m[0].ids, Tensor(m[0].values.shape())};
  auto dst = out.values.data();
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const auto src = m[k].values.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weights[k] * src[i];
  }
  for (double& v : dst) v = std::clamp(v, 0.0, 1.0);
  return out;
}

TrainedCV distill_student(const SoftLabelMatrix& soft, const data::Dataset& dataset,
                          const data::FoldSplit& folds, const models::ModelConfig& student,
                          const train::TrainConfig& train, unsigned jobs) {
  LDN_REQUIRE(train.loss == train::LossKind::kBce,
              "distill: soft targets need the BCE loss, not " + std::string(train::loss_name(train.loss)));
  train::TrainConfig t = train;
  t.targets = train::TargetKind::kSoft;
  return train::train_cv(dataset, folds, student, t, &soft, jobs);
}

Tensor fold_penultimate(const std::vector<const TrainedCV*>& students, std::uint32_t fold,
                        const data::Dataset& dataset) {
  LDN_REQUIRE(!students.empty(), "stack: no students");
  std::size_t width = 0;
  for (const TrainedCV* s : students) {
    LDN_REQUIRE(s->folds == students[0]->folds, "stack: students use different fold splits");
    LDN_REQUIRE(!models::penultimate_layer(s->model_config).empty(),
                "stack: student declares no penultimate layer");
    LDN_REQUIRE(fold < s->models.size(), "stack: student has no model for fold " + std::to_string(fold));
    width += models::penultimate_width(s->model_config);
  }
  students[0]->folds.check_matches(dataset);
  const std::size_t n = dataset.records.size();
  Tensor out({n, width});
  std::size_t offset = 0;
  for (const TrainedCV* s : students) {
    const Tensor h = models::penultimate_all(s->models[fold],
                                             models::prepare_features(dataset, s->model_config));
    for (std::size_t i = 0; i < n; ++i)
      std::copy(h.row(i).begin(), h.row(i).end(), out.row(i).begin() + offset);
    offset += h.dim(1);
  }
  return out;
}

models::ModelConfig stacking_head_config(const std::vector<models::ModelConfig>& students) {
  LDN_REQUIRE(!students.empty(), "stack: no students");
  models::LinearHeadConfig head;
  head.vocabulary_size = models::vocabulary_size(students[0]);
  for (const auto& s : students) {
    LDN_REQUIRE(models::vocabulary_size(s) == head.vocabulary_size,
                "stack: students disagree on the vocabulary");
    head.input_dim += models::penultimate_width(s);
  }
  return head;
}

FinalModel stack_penultimate(const std::vector<const TrainedCV*>& students,
                             const SoftLabelMatrix& soft, const data::Dataset& dataset,
                             const train::TrainConfig& head_train, unsigned jobs) {
  LDN_REQUIRE(!students.empty(), "stack: no students");
  LDN_REQUIRE(head_train.loss == train::LossKind::kBce, "stack: the head trains with BCE");
  const data::FoldSplit& folds = students[0]->folds;
  folds.check_matches(dataset);
  LDN_REQUIRE(soft.ids == folds.ids, "stack: soft labels do not cover the records in order");
  std::vector<models::ModelConfig> configs;
  for (const TrainedCV* s : students) configs.push_back(s->model_config);
  const models::ModelConfig head = stacking_head_config(configs);
  LDN_REQUIRE(soft.values.rank() == 2 && soft.values.dim(0) == folds.ids.size() &&
                  soft.values.dim(1) == models::vocabulary_size(head),
              "stack: soft labels must be [records x vocabulary]");

  train::TrainConfig t = head_train;
  t.targets = train::TargetKind::kSoft;
  const auto truth = loss::ground_truth(dataset);
  FinalModel final;
  final.ids = folds.ids;
  final.head_oof = Tensor({folds.ids.size(), models::vocabulary_size(head)});
  std::vector<std::uint32_t> kept(folds.k, 1);
  models::FeatureTable fold0;
  train::parallel_for(folds.k, jobs, [&](std::size_t f) {
    const auto fold = static_cast<std::uint32_t>(f);
    auto table = models::dense_features(folds.ids, fold_penultimate(students, fold, dataset));
    const auto train_rows = folds.complement(fold);
    const auto held = folds.members(fold);
    const auto fit = train::fit_model(head, t, table, soft.values, train_rows, held, &truth,
                                      Rng::derive(t.seed, "fold", f), fold);
    const Tensor p = train::predict_rows(fit.model, table, held);
    for (std::size_t i = 0; i < held.size(); ++i)
      std::copy(p.row(i).begin(), p.row(i).end(), final.head_oof.row(held[i]).begin());
    kept[f] = fit.best_gap ? fit.best_epoch : fit.history.back().epoch;
    if (f == 0) fold0 = std::move(table);
  });
  final.head_oof_gap = loss::gap_at_n(final.head_oof, final.ids, truth, head_train.gap_n);
  for (const TrainedCV* s : students) final.students.push_back(s->models.at(0));

  std::uint64_t epochs = 0;
  for (std::uint32_t e : kept) epochs += e;
  train::TrainConfig all = t;
  all.epochs = static_cast<std::uint32_t>(std::max<std::uint64_t>(1, (epochs + folds.k / 2) / folds.k));
  all.patience = 0;
  std::vector<std::size_t> rows(folds.ids.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  final.head = train::fit_model(head, all, fold0, soft.values, rows, {}, nullptr,
                                Rng::derive(t.seed, "stack_head"))
                   .model;
  return final;
}

Tensor predict_final(const FinalModel& model, const data::Dataset& dataset) {
  std::vector<Tensor> parts;
  std::size_t width = 0;
  for (const auto& s : model.students) {
    models::ModelConfig c = s.config;
    models::bind_dims(c, dataset.vocabulary_size, dataset.video_dim, dataset.audio_dim);
    parts.push_back(models::penultimate_all(s, models::prepare_features(dataset, c)));
    width += parts.back().dim(1);
  }
  const std::size_t n = dataset.records.size();
  Tensor features({n, width});
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    for (std::size_t i = 0; i < n; ++i)
      std::copy(p.row(i).begin(), p.row(i).end(), features.row(i).begin() + offset);
    offset += p.dim(1);
  }
  std::vector<std::string> ids;
  for (const auto& r : dataset.records) ids.push_back(r.id);
  return models::predict_all(model.head, models::dense_features(ids, features));
}

std::vector<std::uint8_t> encode_final(const FinalModel& model) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kFinalFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(model.students.size()));
  auto append = [&](const models::ModelParams& m) {
    const auto bytes = models::encode_model(m);
    put_u64(out, bytes.size());
    out.insert(out.end(), bytes.begin(), bytes.end());
  };
  for (const auto& s : model.students) append(s);
  append(model.head);
  return out;
}

FinalModel decode_final(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  const auto magic = r.block(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("final model: bad magic");
  const auto version = r.uint(4);
  if (version != kFinalFormatVersion)
    throw FormatError("final model: unsupported version " + std::to_string(version));
  const auto count = r.uint(4);
  FinalModel m;
  for (std::uint64_t i = 0; i < count; ++i) m.students.push_back(models::decode_model(r.block(r.uint(8))));
  m.head = models::decode_model(r.block(r.uint(8)));
  if (!r.done()) throw FormatError("final model: trailing bytes");
  return m;
}

std::uint64_t final_size_bytes(const std::vector<models::ModelConfig>& students,
                               const models::ModelConfig& head) {
  std::uint64_t total = 4 + 4 + 4;
  for (const auto& s : students) total += 8 + models::size_bytes(s);
  return total + 8 + models::size_bytes(head);
}

std::uint64_t final_size_bytes(const FinalModel& model) {
  std::vector<models::ModelConfig> c;
  for (const auto& s : model.students) c.push_back(s.config);
  return final_size_bytes(c, model.head.config);
}

BudgetReport budget_check(const std::vector<models::ModelConfig>& students,
                          const models::ModelConfig& head, std::uint64_t budget_bytes) {
  BudgetReport r;
  for (const auto& s : students) r.student_bytes.push_back(models::size_bytes(s));
  r.head_bytes = models::size_bytes(head);
  r.bytes = final_size_bytes(students, head);
  r.budget = budget_bytes;
  r.pass = r.bytes <= budget_bytes;
  return r;
}

BudgetReport budget_check(const FinalModel& model, std::uint64_t budget_bytes) {
  BudgetReport r;
  for (const auto& s : model.students) r.student_bytes.push_back(models::encode_model(s).size());
  r.head_bytes = models::encode_model(model.head).size();
  r.bytes = encode_final(model).size();
  r.budget = budget_bytes;
  r.pass = r.bytes <= budget_bytes;
  return r;
}

}  // namespace ldn::distill
