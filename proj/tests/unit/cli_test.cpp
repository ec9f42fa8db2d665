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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ldn/cli/cli.hpp"
#include "ldn/dataio/dataset.hpp"
#include "ldn/dataio/predictions.hpp"

namespace ldn::cli {
namespace {
namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Every regular file under dir, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return files;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ldn_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, EvalOneVideoExample) {
  data::Dataset ds;
  ds.vocabulary_size = 2;
  ds.video_dim = 1;
  ds.audio_dim = 1;
  ds.records.push_back({"v", {0.0}, {0.0}, std::nullopt, {0}, std::nullopt});
  data::write_dataset(at("d.ldns"), ds);
  data::write_predictions(at("p.pred"), {data::PredictionList{"v", {{1, 0.9}, {0, 0.5}}}});
  const auto r = run({"eval", "--pred", at("p.pred"), "--truth", at("d.ldns"), "--n", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_EQ(j["gap"].get<double>(), 0.5);
  EXPECT_EQ(j["n"].get<int>(), 20);
  EXPECT_EQ(j["videos"].get<int>(), 1);
  EXPECT_EQ(run({"eval", "--pred", at("p.pred"), "--truth", at("d.ldns"), "--clean"}).code, 2);
}

TEST_F(CliTest, HelpForEverySubcommand) {
  EXPECT_EQ(run({"--help"}).code, 0);
  for (const char* sub : {"synth", "folds", "train", "predict", "eval", "ensemble", "distill",
                          "stack", "analyze", "gradcheck"}) {
    const auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
    EXPECT_NE(r.out.find("--"), std::string::npos) << sub;
  }
}

TEST_F(CliTest, MalformedInvocations) {
  put(at("garbage.ldns"), "not a dataset at all");
  put(at("garbage.pred"), "v\tnot-a-label:x\n");
  put(at("bad.cfg"), "no_such_key = 1\n");
  const std::vector<std::vector<std::string>> usage{
      {},
      {"frobnicate"},
      {"train"},
      {"synth"},
      {"synth", "--out"},
      {"synth", "--out", at("x"), "--preset", "huge"},
      {"synth", "--out", at("x"), "--seed", "-3"},
      {"synth", "--out", at("x"), "--seed", "abc"},
      {"synth", "--out", at("x"), "--bogus"},
      {"folds", "--data", at("missing.ldns"), "--out", at("f.tsv")},
      {"folds", "--data", at("garbage.ldns"), "--out", at("f.tsv"), "--k", "1"},
      {"train", "--data", at("missing.ldns"), "--folds", at("f.tsv"), "--out", at("r")},
      {"train", "--data", at("x"), "--folds", at("f"), "--out", at("r"), "--jobs", "0"},
      {"eval", "--pred", at("missing.pred"), "--truth", at("missing.ldns")},
      {"eval", "--pred", at("p"), "--truth", at("d"), "--n", "0"},
      {"predict", "--model", at("missing.model"), "--data", at("x"), "--out", at("p")},
      {"ensemble", "--runs", at("nope"), "--data", at("x"), "--out", at("e")},
      {"gradcheck", "extra"},
  };
  for (const auto& args : usage) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 2) << ::testing::PrintToString(args);
    EXPECT_FALSE(r.err.empty());
    EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << "diagnostic must be one line";
  }
  EXPECT_EQ(run({"folds", "--data", at("garbage.ldns"), "--out", at("f.tsv")}).code, 3);
  EXPECT_EQ(run({"synth", "--out", at("d.ldns"), "--videos", "12"}).code, 0);
  EXPECT_EQ(run({"eval", "--pred", at("garbage.pred"), "--truth", at("d.ldns")}).code, 3);
  EXPECT_EQ(run({"folds", "--data", at("d.ldns"), "--out", at("f.tsv"), "--k", "3"}).code, 0);
  EXPECT_EQ(run({"train", "--data", at("d.ldns"), "--folds", at("f.tsv"), "--out", at("r"),
                 "--model-config", at("bad.cfg")})
                .code,
            2);
}

TEST_F(CliTest, GradcheckPasses) {
  const auto r = run({"gradcheck"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_LT(j["max_relative_error"].get<double>(), 1e-4);
  EXPECT_TRUE(j["pass"].get<bool>());
  EXPECT_EQ(j["architectures"].size(), gradcheck_suite().size());
}

TEST_F(CliTest, PresetsResolve) {
  const auto desk = preset("desk");
  EXPECT_EQ(desk.generator.video_dim, 64u);
  EXPECT_EQ(desk.generator.audio_dim, 16u);
  EXPECT_EQ(desk.generator.num_videos, 2000u);
  EXPECT_EQ(desk.generator.vocabulary_size, 50u);
  EXPECT_EQ(std::get<models::ResNetLikeConfig>(desk.model).inner_size, 64u);
  const auto wide = preset("paperlike");
  EXPECT_EQ(wide.generator.video_dim, 1024u);
  EXPECT_EQ(wide.generator.audio_dim, 128u);
  EXPECT_EQ(std::get<models::ResNetLikeConfig>(wide.model).inner_size, 2048u);
  EXPECT_EQ(ensemble_members(desk).size(), 4u);
}

TEST_F(CliTest, PipelineIsDeterministic) {
  put(at("model.cfg"), "inner_size = 8\n");
  put(at("train.cfg"), "epochs = 2\nbatch_size = 16\n");
  put(at("audio.cfg"), "inner_size = 8\nmodality = audio_only\n");
  ASSERT_EQ(run({"synth", "--out", at("d.ldns"), "--videos", "60", "--seed", "4"}).code, 0);
  ASSERT_EQ(run({"folds", "--data", at("d.ldns"), "--out", at("f.tsv"), "--k", "3"}).code, 0);

  auto train = [&](const std::string& out, const std::string& model_cfg, const std::string& jobs) {
    const auto r = run({"train", "--data", at("d.ldns"), "--folds", at("f.tsv"), "--model-config",
                        at(model_cfg), "--train-config", at("train.cfg"), "--out", at(out),
                        "--seed", "9", "--jobs", jobs});
    EXPECT_EQ(r.code, 0) << r.err;
    return r;
  };
  const auto t1 = train("run_a", "model.cfg", "1");
  train("run_a2", "model.cfg", "3");
  train("run_b", "audio.cfg", "1");
  EXPECT_EQ(tree(dir_ / "run_a"), tree(dir_ / "run_a2"));
  EXPECT_NE(t1.json()["model_config"].get<std::string>().find("inner_size = 8"), std::string::npos);

  auto ens = run({"ensemble", "--runs", at("run_a") + "," + at("run_b"), "--data", at("d.ldns"),
                  "--out", at("ens")});
  ASSERT_EQ(ens.code, 0) << ens.err;
  const auto ej = ens.json();
  double best = 0;
  for (const auto& g : ej["singleton_gaps"]) best = std::max(best, g.get<double>());
  EXPECT_GE(ej["gap"].get<double>(), best - 1e-9);
  EXPECT_TRUE(fs::exists(dir_ / "ens" / "ensemble.json"));

  auto distill = [&](const std::string& out, const std::string& jobs) {
    const auto r = run({"distill", "--data", at("d.ldns"), "--folds", at("f.tsv"), "--soft",
                        at("ens"), "--model-config", at("model.cfg"), "--train-config",
                        at("train.cfg"), "--out", at(out), "--jobs", jobs});
    EXPECT_EQ(r.code, 0) << r.err;
  };
  distill("student", "1");
  distill("student2", "2");
  EXPECT_EQ(tree(dir_ / "student"), tree(dir_ / "student2"));

  auto stack = [&](const std::string& out, const std::string& jobs) {
    const auto r = run({"stack", "--students", at("student") + "," + at("run_b"), "--soft",
                        at("ens") + "/soft.pred", "--data", at("d.ldns"), "--train-config",
                        at("train.cfg"), "--out", at(out), "--jobs", jobs});
    EXPECT_EQ(r.code, 0) << r.err;
    return r;
  };
  const auto s1 = stack("final", "1");
  stack("final2", "3");
  EXPECT_EQ(tree(dir_ / "final"), tree(dir_ / "final2"));
  EXPECT_TRUE(s1.json()["budget_pass"].get<bool>());
  EXPECT_EQ(s1.json()["total_bytes"].get<std::uint64_t>(),
            fs::file_size(dir_ / "final" / "final.ldnf"));

  auto pr = run({"predict", "--model", at("final/final.ldnf"), "--data", at("d.ldns"), "--out",
                 at("final.pred"), "--n", "0"});
  ASSERT_EQ(pr.code, 0) << pr.err;
  pr = run({"predict", "--model", at("run_a/fold_0.model"), "--data", at("d.ldns"), "--out",
            at("fold0.pred")});
  ASSERT_EQ(pr.code, 0) << pr.err;
  const auto ev = run({"eval", "--pred", at("final.pred"), "--truth", at("d.ldns"), "--clean"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_GE(ev.json()["gap"].get<double>(), 0.0);
  EXPECT_LE(ev.json()["gap"].get<double>(), 1.0);

  const auto an = run({"analyze", "--pred", at("final.pred"), "--data", at("d.ldns"), "--out",
                       at("analysis"), "--clean"});
  ASSERT_EQ(an.code, 0) << an.err;
  EXPECT_TRUE(fs::exists(dir_ / "analysis" / "groups.tsv"));
  EXPECT_GT(an.json()["groups"].size(), 1u);
  // Top-20 lists of a 50-label vocabulary can miss positives.
  const auto an20 = run({"analyze", "--pred", at("fold0.pred"), "--data", at("d.ldns"), "--out",
                         at("analysis20")});
  EXPECT_TRUE(an20.code == 0 || an20.code == 2);
}

}  // namespace
}  // namespace ldn::cli
