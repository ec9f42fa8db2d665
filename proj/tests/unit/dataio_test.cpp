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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "ldn/dataio/dataset.hpp"
#include "ldn/dataio/folds.hpp"
#include "ldn/dataio/predictions.hpp"
#include "ldn/dataio/synthetic.hpp"
#include "ldn/error.hpp"

namespace ldn::data {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ldn_dataio_test";
  fs::create_directories(dir);
  return dir / name;
}

GeneratorConfig small_config() {
  GeneratorConfig c;
  c.num_videos = 30;
  c.vocabulary_size = 12;
  c.video_dim = 6;
  c.audio_dim = 3;
  c.max_labels = 3;
  return c;
}

TEST(Synthetic, NoNoiseKeepsCleanLabels) {
  const SyntheticData s = generate_synthetic(small_config(), NoiseConfig{0.0, 0.0, 1}, 5);
  for (const VideoRecord& r : s.dataset.records) {
    ASSERT_TRUE(r.clean_labels.has_value());
    EXPECT_EQ(r.noisy_labels, *r.clean_labels);
    EXPECT_GE(r.clean_labels->size(), 1u);
    EXPECT_LE(r.clean_labels->size(), 3u);
  }
  EXPECT_EQ(s.planted_scenes.size(), 30u);
}

TEST(Synthetic, SameSeedIsByteIdentical) {
  const NoiseConfig noise{0.5, 1.0, 3};
  const auto a = encode_dataset(generate_synthetic(small_config(), noise, 42).dataset);
  const auto b = encode_dataset(generate_synthetic(small_config(), noise, 42).dataset);
  const auto c = encode_dataset(generate_synthetic(small_config(), noise, 43).dataset);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synthetic, ImpossibleConfigIsInputError) {
  GeneratorConfig c = small_config();
  c.max_labels = 13;
  EXPECT_THROW(generate_synthetic(c, {}, 1), InputError);
  c = small_config();
  c.vocabulary_size = 1;
  c.max_labels = 1;
  EXPECT_THROW(generate_synthetic(c, {}, 1), InputError);
  EXPECT_THROW(generate_synthetic(small_config(), NoiseConfig{1.5, 0.0, 0}, 1), InputError);
}

TEST(Synthetic, FramesArePiecewiseConstantScenes) {
  const SyntheticData s = generate_synthetic(small_config(), {}, 9);
  for (std::size_t i = 0; i < s.dataset.records.size(); ++i) {
    const auto& f = *s.dataset.records[i].frames;
    EXPECT_EQ(f.dim(1), 9u);
    EXPECT_GE(f.dim(0), s.planted_scenes[i] * 3);
    EXPECT_LE(f.dim(0), s.planted_scenes[i] * 8);
  }
}

struct NoiseCounts {
  double positives = 0, retained = 0, spurious = 0, videos = 0;
};

NoiseCounts count_noise(double fn, double fp, std::uint32_t videos) {
  GeneratorConfig c = small_config();
  c.num_videos = videos;
  c.vocabulary_size = 50;
  c.max_labels = 4;
  c.with_frames = false;
  const SyntheticData s = generate_synthetic(c, NoiseConfig{fn, fp, 11}, 2024);
  NoiseCounts n;
  n.videos = videos;
  for (const VideoRecord& r : s.dataset.records) {
    n.positives += static_cast<double>(r.clean_labels->size());
    for (std::uint32_t l : r.noisy_labels) {
      if (std::binary_search(r.clean_labels->begin(), r.clean_labels->end(), l)) {
        n.retained += 1;
      } else {
        n.spurious += 1;
      }
    }
  }
  return n;
}

TEST(Synthetic, HalfDropoutRetainsBinomialShare) {
  // ~4,000 videos x 2.5 labels ~ 10,000 positives.
  const NoiseCounts n = count_noise(0.5, 0.0, 4000);
  ASSERT_GT(n.positives, 9000);
  const double sigma = std::sqrt(n.positives * 0.25);
  EXPECT_LT(std::abs(n.retained - 0.5 * n.positives), 3 * sigma);
  EXPECT_EQ(n.spurious, 0);
}

TEST(Synthetic, PrecisionAndRecallMatchNoiseModel) {
  const double fn = 0.5, fp = 1.0;
  const NoiseCounts n = count_noise(fn, fp, 10000);
  // Recall: binomial share of retained positives.
  const double recall = n.retained / n.positives;
  EXPECT_LT(std::abs(recall - (1 - fn)), 3 * std::sqrt(fn * (1 - fn) / n.positives));
  // Spurious count: sum of independent Poisson(fp) draws (cap never binds
  // with 46+ candidates per video).
  EXPECT_LT(std::abs(n.spurious - fp * n.videos), 3 * std::sqrt(fp * n.videos));
  // Precision R / (R + S) against its analytic value, delta-method sigma.
  const double er = (1 - fn) * n.positives, es = fp * n.videos;
  const double expected_precision = er / (er + es);
  const double var_r = n.positives * fn * (1 - fn), var_s = fp * n.videos;
  const double denom = (er + es) * (er + es);
  const double sigma = std::sqrt(std::pow(es / denom, 2) * var_r + std::pow(er / denom, 2) * var_s);
  const double precision = n.retained / (n.retained + n.spurious);
  EXPECT_LT(std::abs(precision - expected_precision), 3 * sigma);
}

TEST(Synthetic, CorruptNeverDuplicatesOrLeavesVocabulary) {
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const LabelSet clean{1, 3, 4};
    const LabelSet noisy = corrupt_labels(clean, 6, NoiseConfig{0.3, 5.0, 0}, rng);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      EXPECT_LT(noisy[i], 6u);
      if (i) EXPECT_LT(noisy[i - 1], noisy[i]);
    }
  }
}

TEST(Folds, ExactDivisionAndBalance) {
  std::vector<std::string> ten, eleven;
  for (int i = 0; i < 11; ++i) {
    (i < 10 ? ten : eleven).push_back("v" + std::to_string(i));
    if (i < 10) eleven.push_back("v" + std::to_string(i));
  }
  std::sort(eleven.begin(), eleven.end());
  eleven.erase(std::unique(eleven.begin(), eleven.end()), eleven.end());
  ASSERT_EQ(eleven.size(), 11u);
  const FoldSplit a = make_folds(ten, 5, 1);
  for (std::uint32_t f = 0; f < 5; ++f) EXPECT_EQ(a.members(f).size(), 2u);
  const FoldSplit b = make_folds(eleven, 5, 1);
  std::vector<std::size_t> sizes;
  for (std::uint32_t f = 0; f < 5; ++f) sizes.push_back(b.members(f).size());
  std::sort(sizes.rbegin(), sizes.rend());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2, 2}));
  EXPECT_EQ(make_folds(eleven, 5, 7), make_folds(eleven, 5, 7));
  EXPECT_THROW(make_folds(ten, 11, 1), InputError);
  EXPECT_THROW(make_folds(ten, 1, 1), InputError);
}

TEST(Folds, InvariantsOnRandomTriples) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.uniform_int(9));
    const std::size_t n = k + rng.uniform_int(60);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
    const FoldSplit s = make_folds(ids, k, rng.next());
    ASSERT_EQ(s.fold.size(), n);
    std::size_t covered = 0, lo = n, hi = 0;
    for (std::uint32_t f = 0; f < k; ++f) {
      const std::size_t m = s.members(f).size();
      covered += m;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    EXPECT_EQ(covered, n);  // fold labels are single-valued, so disjoint
    EXPECT_LE(hi - lo, 1u);
  }
}

TEST(Folds, FileRoundTrip) {
  const Dataset ds = generate_synthetic(small_config(), {}, 3).dataset;
  const FoldSplit s = make_folds(ds, 5, 2);
  write_folds(temp_path("f.tsv"), s);
  const FoldSplit back = read_folds(temp_path("f.tsv"));
  EXPECT_EQ(back, s);
  back.check_matches(ds);
}

Dataset three_records(bool frames) {
  Dataset ds;
  ds.vocabulary_size = 5;
  ds.video_dim = 2;
  ds.audio_dim = 1;
  for (int i = 0; i < 3; ++i) {
    VideoRecord r;
    r.id = "rec" + std::to_string(i);
    r.video = {0.5 * i, -1.25};
    r.audio = {3.0};
    if (frames) r.frames = diff::Tensor({static_cast<std::size_t>(i + 1), 3}, 0.25 * i);
    r.noisy_labels = {static_cast<std::uint32_t>(i), 4};
    if (i != 1) r.clean_labels = LabelSet{static_cast<std::uint32_t>(i)};
    ds.records.push_back(r);
  }
  return ds;
}

TEST(DatasetFile, RoundTripsFieldByField) {
  for (bool frames : {true, false}) {
    const Dataset ds = three_records(frames);
    const fs::path p = temp_path(frames ? "with_frames.ldns" : "no_frames.ldns");
    write_dataset(p, ds);
    Dataset back = load_dataset(p);
    EXPECT_EQ(back.has_frames(), frames);
    back.groups = ds.groups;
    EXPECT_EQ(back, ds);
    const auto bytes = read_file_bytes(p);
    EXPECT_EQ(bytes[4 + 4 * 4], frames ? 1 : 0);  // frames flag
  }
}

TEST(DatasetFile, HeaderLayout) {
  const auto bytes = encode_dataset(three_records(false));
  EXPECT_EQ(std::memcmp(bytes.data(), "LDNS", 4), 0);
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], 5);  // vocabulary
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(bytes[16], 1);
  EXPECT_EQ(bytes[21], 3);  // record count after the flag byte
}

TEST(DatasetFile, CorruptMagicAndVersionAreFormatErrors) {
  auto bytes = encode_dataset(three_records(true));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_dataset(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(decode_dataset(bad), FormatError);
}

TEST(DatasetFile, TruncationReportsByteOffset) {
  const auto bytes = encode_dataset(three_records(true));
  for (std::size_t cut : {std::size_t{3}, std::size_t{25}, bytes.size() - 1}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    try {
      decode_dataset(part);
      FAIL() << "expected FormatError at cut " << cut;
    } catch (const FormatError& e) {
      EXPECT_NE(std::strstr(e.what(), "byte offset"), nullptr) << e.what();
    }
  }
}

TEST(DatasetFile, SyntheticRoundTripIsBitExact) {
  const Dataset ds = generate_synthetic(small_config(), NoiseConfig{0.5, 1.0, 1}, 8).dataset;
  const auto bytes = encode_dataset(ds);
  Dataset back = decode_dataset(bytes);
  back.groups = ds.groups;
  EXPECT_EQ(back, ds);
  EXPECT_EQ(encode_dataset(back), bytes);
}

TEST(DatasetFile, MissingFileIsInputError) {
  EXPECT_THROW(load_dataset("/nonexistent/x.ldns"), InputError);
}

TEST(GroupMap, RoundTrip) {
  const std::map<std::uint32_t, std::string> g{{0, "arts"}, {3, "games & toys"}};
  write_group_map(temp_path("g.tsv"), g);
  EXPECT_EQ(read_group_map(temp_path("g.tsv")), g);
}

TEST(Predictions, SingleVideoRoundTrip) {
  const std::vector<PredictionList> p{{"vidA", {{3, 0.9}, {1, 0.5}}}};
  const std::string text = encode_predictions(p);
  EXPECT_EQ(text, "vidA\t3:0.9,1:0.5\n");
  write_predictions(temp_path("one.pred"), p);
  EXPECT_EQ(read_predictions(temp_path("one.pred")), p);
}

TEST(Predictions, EmptySetIsEmptyFile) {
  write_predictions(temp_path("empty.pred"), {});
  EXPECT_EQ(fs::file_size(temp_path("empty.pred")), 0u);
  EXPECT_TRUE(read_predictions(temp_path("empty.pred")).empty());
}

TEST(Predictions, NineDigitScoresStayDistinct) {
  // 1.0 and 0.999999999 differ in the 9th significant digit and so survive
  // the 9-digit decimal encoding as different values.
  const std::vector<PredictionList> p{{"v", {{0, 1.0}, {1, 0.999999999}}}};
  const auto back = decode_predictions(encode_predictions(p));
  EXPECT_EQ(back[0].entries[0].score, 1.0);
  EXPECT_EQ(back[0].entries[1].score, 0.999999999);
  EXPECT_NE(back[0].entries[0].score, back[0].entries[1].score);
}

TEST(Predictions, ReadInvertsWriteAtNineDigits) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> row(7);
    for (double& v : row) v = rng.uniform();
    const PredictionList list = top_n("v", row, 7);
    const auto back = decode_predictions(encode_predictions({list}));
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      EXPECT_EQ(back[0].entries[i].score, round_to_stored(list.entries[i].score));
      EXPECT_EQ(format_score(back[0].entries[i].score), format_score(list.entries[i].score));
    }
  }
}

TEST(Predictions, UnsortedIsInputErrorMalformedIsFormatError) {
  EXPECT_THROW(encode_predictions({{"v", {{1, 0.2}, {2, 0.8}}}}), InputError);
  EXPECT_THROW(encode_predictions({{"v", {{1, 0.8}, {1, 0.2}}}}), InputError);
  try {
    decode_predictions("a\t1:0.5\nb\t2:zz\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::strstr(e.what(), "line 2"), nullptr) << e.what();
  }
  EXPECT_THROW(decode_predictions("no tab here\n"), FormatError);
  EXPECT_THROW(decode_predictions("a\t1:0.2,2:0.5\n"), FormatError);
}

TEST(Predictions, TopNBreaksTiesByLabel) {
  const std::vector<double> row{0.5, 0.9, 0.5, 0.1};
  const PredictionList p = top_n("v", row, 3);
  ASSERT_EQ(p.entries.size(), 3u);
  EXPECT_EQ(p.entries[0].label, 1u);
  EXPECT_EQ(p.entries[1].label, 0u);
  EXPECT_EQ(p.entries[2].label, 2u);
}

TEST(Predictions, MatrixConversion) {
  const std::vector<PredictionList> p{{"b", {{1, 0.7}}}, {"a", {{0, 0.3}}}};
  const diff::Tensor m = predictions_to_matrix(p, {"a", "b"}, 2);
  EXPECT_EQ(m.at(0, 0), 0.3);
  EXPECT_EQ(m.at(1, 1), 0.7);
  EXPECT_EQ(m.at(0, 1), 0.0);
  EXPECT_THROW(predictions_to_matrix(p, {"a", "b", "c"}, 2), InputError);
}

}  // namespace
}  // namespace ldn::data
