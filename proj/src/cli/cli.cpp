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

#include "ldn/cli/cli.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldn/analysis/analysis.hpp"
#include "ldn/dataio/folds.hpp"
#include "ldn/dataio/predictions.hpp"
#include "ldn/distill/distill.hpp"
#include "ldn/error.hpp"
#include "ldn/lossmetrics/metrics.hpp"
#include "ldn/models/model.hpp"

namespace ldn::cli {
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  p.noise.fn_rate = 0.5;
  p.noise.fp_rate = 1.0;
  models::ResNetLikeConfig r;
  if (name == "desk") {
    r.inner_size = 64;
    p.train.optimizer.learning_rate = 1e-2;
    p.train.epochs = 30;
    p.budget_bytes = 50'000'000;
  } else if (name == "paperlike") {
    p.generator.num_videos = 500;
    p.generator.vocabulary_size = 3862;
    p.generator.video_dim = 1024;
    p.generator.audio_dim = 128;
    p.budget_bytes = 1'000'000'000;
  } else {
    throw InputError("unknown preset '" + name + "' (expected desk or paperlike)");
  }
  r.dropout_rate = 0.5;
  p.train.batch_size = 64;
  p.train.patience = 3;
  p.model = r;
  return p;
}

std::vector<NamedConfig> ensemble_members(const Preset& p) {
  const auto base = std::get<models::ResNetLikeConfig>(p.model);
  auto with = [&](models::Modality m, bool stats) {
    auto c = base;
    c.modality = m;
    c.use_frame_stats = stats;
    return models::ModelConfig{c};
  };
  return {{"both", with(models::Modality::kBoth, false)},
          {"audio_only", with(models::Modality::kAudioOnly, false)},
          {"video_only", with(models::Modality::kVideoOnly, false)},
          {"frame_stats", with(models::Modality::kBoth, true)}};
}

std::vector<NamedConfig> gradcheck_suite() {
  using namespace models;
  auto resnet = [](Modality m) {
    ResNetLikeConfig c;
    c.inner_size = 8;
    c.dropout_rate = 0.0;
    c.modality = m;
    c.vocabulary_size = 5;
    c.video_dim = 6;
    c.audio_dim = 3;
    return c;
  };
  auto head = [&] {
    auto h = resnet(Modality::kFused);
    h.inner_size = 5;
    return h;
  };
  auto bottleneck = resnet(Modality::kBoth);
  bottleneck.inner_size = 4;
  auto stats = resnet(Modality::kBoth);
  stats.use_frame_stats = true;
  stats.video_dim = 2;
  stats.audio_dim = 1;
  auto tanh = resnet(Modality::kBoth);
  tanh.activation = Activation::kTanh;
  VladBowConfig vlad;
  vlad.clusters = 3;
  vlad.frame_dim = 4;
  vlad.head = head();
  FrameMixConfig mix;
  mix.combinations = 2;
  mix.t_max = 4;
  mix.frame_dim = 3;
  mix.head = head();
  std::vector<NamedConfig> out{
      {"resnet_both", resnet(Modality::kBoth)},
      {"resnet_video_only", resnet(Modality::kVideoOnly)},
      {"resnet_audio_only", resnet(Modality::kAudioOnly)},
      {"resnet_bottleneck", bottleneck},
      {"resnet_frame_stats", stats},
      {"resnet_tanh", tanh},
      {"vladbow", vlad},
      {"framemix", mix},
      {"linear", LinearHeadConfig{6, 5}},
  };
  for (auto& c : out) normalize(c.config);
  return out;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

void require_exists(const std::string& path, const char* flag) {
  if (!fs::exists(path)) throw InputError(std::string(flag) + ": no such path '" + path + "'");
}

data::Dataset load(const std::string& path) {
  require_exists(path, "--data");
  return data::load_dataset(path);
}

std::string groups_path(const std::string& data_path) { return data_path + ".groups.tsv"; }

loss::GroundTruth truth_of(const data::Dataset& ds, bool clean) {
  if (clean && !ds.has_clean_labels()) throw InputError("--clean: dataset has no clean labels");
  return loss::ground_truth(ds, clean);
}

std::vector<std::string> ids_of(const data::Dataset& ds) {
  std::vector<std::string> ids;
  ids.reserve(ds.records.size());
  for (const auto& r : ds.records) ids.push_back(r.id);
  return ids;
}

// Every label, so a prediction file doubles as a soft-label matrix.
void write_full_predictions(const fs::path& path, const std::vector<std::string>& ids,
                            const diff::Tensor& scores) {
  data::write_predictions(path, data::top_n(ids, scores, scores.dim(1)));
}

train::SoftLabelMatrix load_soft(std::string path, const data::Dataset& ds) {
  require_exists(path, "--soft");
  if (fs::is_directory(path)) path = (fs::path(path) / "soft.pred").string();
  train::SoftLabelMatrix soft;
  soft.ids = ids_of(ds);
  soft.values = data::predictions_to_matrix(data::read_predictions(path), soft.ids,
                                            ds.vocabulary_size);
  return soft;
}

struct Common {
  std::string data, folds, model_config, train_config, out, preset = "desk";
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned jobs = 1;
  std::size_t n = 20;
  bool clean = false;
};

models::ModelConfig resolve_model(const Common& c, const Preset& p) {
  if (c.model_config.empty()) return p.model;
  require_exists(c.model_config, "--model-config");
  return models::parse_model_config(read_text(c.model_config), &p.model);
}

train::TrainConfig resolve_train(const Common& c, const Preset& p) {
  train::TrainConfig t = p.train;
  if (!c.train_config.empty()) {
    require_exists(c.train_config, "--train-config");
    t = train::parse_train_config(read_text(c.train_config), &p.train);
  }
  if (c.seed_given) t.seed = c.seed;
  train::validate(t);
  return t;
}

Json gap_report(const train::TrainedCV& run, const data::Dataset& ds) {
  Json j;
  j["fold_gap"] = run.fold_gap;
  j["oof_gap"] = train::oof_gap(run, loss::ground_truth(ds));
  if (ds.has_clean_labels()) j["oof_gap_clean"] = train::oof_gap(run, loss::ground_truth(ds, true));
  return j;
}

Json run_synth(const Common& c, std::uint32_t videos, double fn_rate, double fp_rate,
               bool fn_set, bool fp_set) {
  Preset p = preset(c.preset);
  if (videos > 0) p.generator.num_videos = videos;
  if (fn_set) p.noise.fn_rate = fn_rate;
  if (fp_set) p.noise.fp_rate = fp_rate;
  const auto synth = data::generate_synthetic(p.generator, p.noise, c.seed);
  data::write_dataset(c.out, synth.dataset);
  data::write_group_map(groups_path(c.out), synth.dataset.groups);
  Json j;
  j["out"] = c.out;
  j["groups"] = groups_path(c.out);
  j["preset"] = p.name;
  j["seed"] = c.seed;
  j["records"] = synth.dataset.records.size();
  j["vocabulary_size"] = p.generator.vocabulary_size;
  j["video_dim"] = p.generator.video_dim;
  j["audio_dim"] = p.generator.audio_dim;
  j["frames"] = p.generator.with_frames;
  j["fn_rate"] = p.noise.fn_rate;
  j["fp_rate"] = p.noise.fp_rate;
  return j;
}

Json run_folds(const Common& c, std::uint32_t k) {
  const auto ds = load(c.data);
  const auto folds = data::make_folds(ds, k, c.seed);
  data::write_folds(c.out, folds);
  std::vector<std::size_t> sizes;
  for (std::uint32_t f = 0; f < k; ++f) sizes.push_back(folds.members(f).size());
  Json j;
  j["out"] = c.out;
  j["k"] = k;
  j["seed"] = c.seed;
  j["fold_sizes"] = sizes;
  return j;
}

data::FoldSplit load_folds(const Common& c) {
  require_exists(c.folds, "--folds");
  return data::read_folds(c.folds);
}

Json run_train(const Common& c, const train::SoftLabelMatrix* soft) {
  const Preset p = preset(c.preset);
  const auto ds = load(c.data);
  const auto folds = load_folds(c);
  const auto mc = resolve_model(c, p);
  const auto tc = resolve_train(c, p);
  const auto run = soft ? distill::distill_student(*soft, ds, folds, mc, tc, c.jobs)
                        : train::train_cv(ds, folds, mc, tc, nullptr, c.jobs);
  train::write_run(c.out, run);
  Json j;
  j["out"] = c.out;
  j["architecture"] = models::architecture_tag(run.model_config);
  j["model_config"] = models::canonical_text(run.model_config);
  j["train_config"] = train::canonical_text(run.train_config);
  j["distilled"] = run.distilled;
  j.update(gap_report(run, ds));
  return j;
}

Json run_predict(const Common& c, const std::string& model_path) {
  const auto ds = load(c.data);
  require_exists(model_path, "--model");
  const auto bytes = data::read_file_bytes(model_path);
  diff::Tensor probs;
  std::string kind;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "LDNF", 4) == 0) {
    probs = distill::predict_final(distill::decode_final(bytes), ds);
    kind = "final";
  } else {
    const auto m = models::decode_model(bytes);
    probs = models::predict_all(m, models::prepare_features(ds, m.config));
    kind = models::architecture_tag(m.config);
  }
  const std::size_t n = c.n == 0 ? probs.dim(1) : c.n;
  data::write_predictions(c.out, data::top_n(ids_of(ds), probs, n));
  Json j;
  j["out"] = c.out;
  j["model"] = kind;
  j["videos"] = ds.records.size();
  j["n"] = n;
  return j;
}

std::vector<data::PredictionList> load_predictions(const std::string& path) {
  require_exists(path, "--pred");
  return data::read_predictions(path);
}

Json run_eval(const Common& c, const std::string& pred, const std::string& truth_path) {
  const auto preds = load_predictions(pred);
  require_exists(truth_path, "--truth");
  const auto ds = data::load_dataset(truth_path);
  const double gap = loss::gap_at_n(preds, truth_of(ds, c.clean), c.n);
  Json j;
  j["gap"] = gap;
  j["n"] = c.n;
  j["videos"] = preds.size();
  return j;
}

std::vector<train::TrainedCV> load_runs(const std::vector<std::string>& dirs, const char* flag) {
  if (dirs.empty()) throw InputError(std::string(flag) + ": at least one run directory required");
  std::vector<train::TrainedCV> runs;
  for (const auto& d : dirs) {
    require_exists(d, flag);
    runs.push_back(train::read_run(d));
  }
  return runs;
}

Json run_ensemble(const Common& c, const std::vector<std::string>& dirs) {
  const auto ds = load(c.data);
  const auto runs = load_runs(dirs, "--runs");
  const auto matrices = distill::oof_soft_labels(runs);
  for (const auto& m : matrices)
    if (m.ids != ids_of(ds)) throw InputError("--runs: run ids do not match --data");
  const auto fit = distill::fit_ensemble_weights(matrices, loss::ground_truth(ds), c.n);
  const auto soft = distill::combine(matrices, fit.weights);
  fs::create_directories(c.out);
  write_full_predictions(fs::path(c.out) / "soft.pred", soft.ids, soft.values);
  Json models = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Json m;
    m["run"] = dirs[i];
    m["architecture"] = models::architecture_tag(runs[i].model_config);
    m["model_config"] = models::canonical_text(runs[i].model_config);
    m["weight"] = fit.weights[i];
    m["singleton_gap"] = fit.singleton_gaps[i];
    models.push_back(m);
  }
  Json report;
  report["models"] = models;
  report["weights"] = fit.weights;
  report["singleton_gaps"] = fit.singleton_gaps;
  report["gap"] = fit.gap;
  report["best_singleton_gap"] = *std::max_element(fit.singleton_gaps.begin(), fit.singleton_gaps.end());
  report["moves"] = fit.moves;
  report["n"] = c.n;
  write_text(fs::path(c.out) / "ensemble.json", report.dump(2) + "\n");
  Json j = report;
  j["out"] = c.out;
  j["soft"] = (fs::path(c.out) / "soft.pred").string();
  return j;
}

Json run_stack(const Common& c, const std::vector<std::string>& dirs, const std::string& soft_path,
               std::uint64_t budget, bool budget_set) {
  const Preset p = preset(c.preset);
  const auto ds = load(c.data);
  const auto runs = load_runs(dirs, "--students");
  const auto soft = load_soft(soft_path, ds);
  const auto tc = resolve_train(c, p);
  std::vector<const train::TrainedCV*> ptrs;
  for (const auto& r : runs) ptrs.push_back(&r);
  const auto final_model = distill::stack_penultimate(ptrs, soft, ds, tc, c.jobs);
  const auto bytes = distill::encode_final(final_model);
  const auto report = distill::budget_check(final_model, budget_set ? budget : p.budget_bytes);
  fs::create_directories(c.out);
  data::write_file_bytes(fs::path(c.out) / "final.ldnf", bytes);
  write_full_predictions(fs::path(c.out) / "head_oof.pred", final_model.ids, final_model.head_oof);

  Json students = Json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Json s;
    s["run"] = dirs[i];
    s["architecture"] = models::architecture_tag(final_model.students[i].config);
    s["model_config"] = models::canonical_text(final_model.students[i].config);
    s["penultimate_width"] = models::penultimate_width(final_model.students[i].config);
    s["bytes"] = report.student_bytes[i];
    students.push_back(s);
  }
  Json manifest;
  manifest["format"] = "LDNF";
  manifest["version"] = distill::kFinalFormatVersion;
  manifest["students"] = students;
  manifest["head"] = {{"model_config", models::canonical_text(final_model.head.config)},
                      {"bytes", report.head_bytes}};
  manifest["train_config"] = train::canonical_text(tc);
  manifest["total_bytes"] = report.bytes;
  manifest["budget_bytes"] = report.budget;
  manifest["budget_pass"] = report.pass;
  manifest["head_oof_gap"] = final_model.head_oof_gap;
  if (ds.has_clean_labels()) {
    manifest["head_oof_gap_clean"] =
        loss::gap_at_n(final_model.head_oof, final_model.ids, loss::ground_truth(ds, true));
  }
  write_text(fs::path(c.out) / "manifest.json", manifest.dump(2) + "\n");
  Json j = manifest;
  j["out"] = c.out;
  return j;
}

Json run_analyze(const Common& c, const std::string& pred, std::string groups) {
  const auto preds = load_predictions(pred);
  const auto ds = load(c.data);
  const auto truth = truth_of(ds, c.clean);
  const auto taxonomy = analysis::error_taxonomy(preds, truth, ds.vocabulary_size, c.n);
  const auto report = analysis::per_label_report(taxonomy, analysis::label_counts(ds));
  if (groups.empty() && fs::exists(groups_path(c.data))) groups = groups_path(c.data);
  std::map<std::uint32_t, std::string> group_map;
  if (!groups.empty()) {
    require_exists(groups, "--groups");
    group_map = data::read_group_map(groups);
  }
  analysis::write_analysis(c.out, report, group_map);
  analysis::LabelCounts total;
  double mean_f1 = 0.0;
  for (const auto& r : report) {
    total.tp += r.counts.tp;
    total.fp += r.counts.fp;
    total.fn += r.counts.fn;
    mean_f1 += r.f1;
  }
  if (!report.empty()) mean_f1 /= static_cast<double>(report.size());
  Json g = Json::array();
  for (const auto& row : analysis::group_accuracy(report, group_map))
    g.push_back({{"group", row.group}, {"mean_f1", row.mean_f1}, {"labels", row.labels},
                 {"positives", row.positives}});
  Json j;
  j["out"] = c.out;
  j["videos"] = taxonomy.classes.size();
  j["tp"] = total.tp;
  j["fp"] = total.fp;
  j["fn"] = total.fn;
  j["mean_label_f1"] = mean_f1;
  j["groups"] = g;
  return j;
}

Json run_gradcheck(const Common& c, bool& pass) {
  Json archs = Json::array();
  double worst = 0.0;
  for (const auto& nc : gradcheck_suite()) {
    const auto r = models::gradcheck(nc.config, c.seed);
    Json tensors = Json::object();
    for (const auto& e : r.entries) tensors[e.tensor] = e.max_relative_error;
    archs.push_back({{"name", nc.name}, {"max_relative_error", r.max_relative_error},
                     {"tensors", tensors}});
    worst = std::max(worst, r.max_relative_error);
  }
  pass = worst < 1e-4;
  Json j;
  j["architectures"] = archs;
  j["max_relative_error"] = worst;
  j["tolerance"] = 1e-4;
  j["pass"] = pass;
  return j;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noisy-label video classification pipeline", "ldn"};
  app.require_subcommand(1);
  Common c;
  std::function<Json()> action;
  int exit_on_success = 0;

  std::vector<CLI::Option*> seed_opts;
  auto seed_opt = [&](CLI::App* s) { seed_opts.push_back(s->add_option("--seed", c.seed, "64-bit seed")); };
  auto preset_opt = [&](CLI::App* s) {
    s->add_option("--preset", c.preset, "desk or paperlike")
        ->check(CLI::IsMember({"desk", "paperlike"}));
  };
  auto jobs_opt = [&](CLI::App* s) {
    s->add_option("--jobs", c.jobs, "parallel fold/model workers")->check(CLI::Range(1u, 1024u));
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::uint32_t videos = 0;
  double fn_rate = 0, fp_rate = 0;
  synth->add_option("--out", c.out, "output .ldns path")->required();
  preset_opt(synth);
  seed_opt(synth);
  synth->add_option("--videos", videos, "number of videos (default from preset)");
  auto* fn_o = synth->add_option("--fn-rate", fn_rate, "label drop probability");
  auto* fp_o = synth->add_option("--fp-rate", fp_rate, "mean spurious labels per video");
  synth->callback([&] {
    action = [&] { return run_synth(c, videos, fn_rate, fp_rate, fn_o->count() > 0, fp_o->count() > 0); };
  });

  auto* folds = app.add_subcommand("folds", "split a dataset into k folds");
  std::uint32_t k = 5;
  folds->add_option("--data", c.data, "dataset path")->required();
  folds->add_option("--out", c.out, "output folds.tsv")->required();
  folds->add_option("--k", k, "fold count")->check(CLI::Range(2u, 1000u));
  seed_opt(folds);
  folds->callback([&] { action = [&] { return run_folds(c, k); }; });

  auto training_opts = [&](CLI::App* s) {
    s->add_option("--data", c.data, "dataset path")->required();
    s->add_option("--folds", c.folds, "folds.tsv from `folds`")->required();
    s->add_option("--model-config", c.model_config, "model config (canonical text)");
    s->add_option("--train-config", c.train_config, "training config (canonical text)");
    s->add_option("--out", c.out, "run directory")->required();
    seed_opt(s);
    preset_opt(s);
    jobs_opt(s);
  };
  auto* trn = app.add_subcommand("train", "k-fold training on the noisy labels");
  training_opts(trn);
  trn->callback([&] { action = [&] { return run_train(c, nullptr); }; });

  auto* pred = app.add_subcommand("predict", "score a dataset with a model or final model");
  std::string model_path;
  pred->add_option("--model", model_path, ".model or final.ldnf file")->required();
  pred->add_option("--data", c.data, "dataset path")->required();
  pred->add_option("--out", c.out, "output .pred path")->required();
  pred->add_option("--n", c.n, "labels kept per video (0 = all)");
  pred->callback([&] { action = [&] { return run_predict(c, model_path); }; });

  auto* ev = app.add_subcommand("eval", "GAP@n of a prediction file");
  std::string pred_path, truth_path;
  ev->add_option("--pred", pred_path, "prediction file")->required();
  ev->add_option("--truth", truth_path, "dataset holding the labels")->required();
  ev->add_option("--n", c.n, "top-n cut")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
  ev->add_flag("--clean", c.clean, "score against clean labels");
  ev->callback([&] { action = [&] { return run_eval(c, pred_path, truth_path); }; });

  auto* ens = app.add_subcommand("ensemble", "fit simplex weights over run OOF predictions");
  std::vector<std::string> run_dirs;
  ens->add_option("--runs", run_dirs, "run directories")->required()->delimiter(',');
  ens->add_option("--data", c.data, "dataset path")->required();
  ens->add_option("--out", c.out, "output directory")->required();
  ens->add_option("--n", c.n, "top-n cut")->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
  ens->callback([&] { action = [&] { return run_ensemble(c, run_dirs); }; });

  auto* dst = app.add_subcommand("distill", "k-fold training on ensemble soft labels");
  std::string soft_path;
  training_opts(dst);
  dst->add_option("--soft", soft_path, "soft.pred or an ensemble directory")->required();
  dst->callback([&] {
    action = [&] {
      const auto ds = load(c.data);
      const auto soft = load_soft(soft_path, ds);
      return run_train(c, &soft);
    };
  });

  auto* stk = app.add_subcommand("stack", "train a head over frozen student features");
  std::uint64_t budget = 0;
  stk->add_option("--students", run_dirs, "student run directories")->required()->delimiter(',');
  stk->add_option("--soft", soft_path, "soft.pred or an ensemble directory")->required();
  stk->add_option("--data", c.data, "dataset path")->required();
  stk->add_option("--train-config", c.train_config, "head training config (canonical text)");
  stk->add_option("--out", c.out, "output directory")->required();
  auto* budget_o = stk->add_option("--budget-bytes", budget, "size budget (default from preset)");
  seed_opt(stk);
  preset_opt(stk);
  jobs_opt(stk);
  stk->callback([&] {
    action = [&] { return run_stack(c, run_dirs, soft_path, budget, budget_o->count() > 0); };
  });

  auto* ana = app.add_subcommand("analyze", "TP/FP/FN taxonomy and per-label tables");
  std::string groups;
  ana->add_option("--pred", pred_path, "prediction file holding every positive's score")->required();
  ana->add_option("--data", c.data, "dataset path")->required();
  ana->add_option("--out", c.out, "output directory")->required();
  ana->add_option("--n", c.n, "negatives considered per video")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
  ana->add_option("--groups", groups, "label<TAB>group file (default <data>.groups.tsv)");
  ana->add_flag("--clean", c.clean, "classify against clean labels");
  ana->callback([&] { action = [&] { return run_analyze(c, pred_path, groups); }; });

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every architecture");
  seed_opt(gc);
  gc->callback([&] {
    action = [&] {
      bool pass = false;
      if (!c.seed_given) c.seed = 17;
      Json j = run_gradcheck(c, pass);
      if (!pass) exit_on_success = 1;
      return j;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << first_line(e.what()) << "\n";
    return 2;
  }
  for (const auto* o : seed_opts) c.seed_given = c.seed_given || o->count() > 0;

  try {
    const Json result = action();
    out << result.dump() << "\n";
    return exit_on_success;
  } catch (const InputError& e) {
    err << "error: " << first_line(e.what()) << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << first_line(e.what()) << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << first_line(e.what()) << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << first_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << first_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace ldn::cli
