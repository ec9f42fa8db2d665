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

#include "ldn/dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "ldn/dataio/binary.hpp"
#include "ldn/error.hpp"

namespace ldn::data {

namespace {

constexpr char kMagic[4] = {'L', 'D', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;

void check_labels(const LabelSet& labels, std::uint32_t vocab,
                  const std::string& id) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    LDN_REQUIRE(labels[i] < vocab, "record '" + id + "': label " +
                                       std::to_string(labels[i]) +
                                       " outside vocabulary");
    LDN_REQUIRE(i == 0 || labels[i - 1] < labels[i],
                "record '" + id + "': labels must be sorted and unique");
  }
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void write_labels(ByteWriter& w, const LabelSet& labels) {
  LDN_REQUIRE(labels.size() <= 0xFFFF, "too many labels for one record");
  w.u16(static_cast<std::uint16_t>(labels.size()));
  for (std::uint32_t l : labels) w.u32(l);
}

LabelSet read_labels(ByteReader& r, std::uint32_t vocab) {
  const std::uint16_t n = r.u16();
  LabelSet labels(n);
  for (auto& l : labels) {
    l = r.u32();
    if (l >= vocab) r.fail("label index " + std::to_string(l) + " >= vocabulary");
  }
  return labels;
}

}  // namespace

bool Dataset::has_frames() const {
  return !records.empty() && records.front().frames.has_value();
}

bool Dataset::has_clean_labels() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const VideoRecord& r) { return r.clean_labels.has_value(); });
}

void Dataset::validate() const {
  LDN_REQUIRE(vocabulary_size >= 1, "dataset: vocabulary must be non-empty");
  std::unordered_set<std::string> seen;
  const bool frames = has_frames();
  for (const VideoRecord& r : records) {
    LDN_REQUIRE(seen.insert(r.id).second, "dataset: duplicate id '" + r.id + "'");
    LDN_REQUIRE(r.id.size() <= 0xFFFF && r.id.find_first_of("\t\n\r") == std::string::npos,
                "dataset: id '" + r.id + "' is too long or contains whitespace controls");
    LDN_REQUIRE(r.video.size() == video_dim && r.audio.size() == audio_dim,
                "dataset: record '" + r.id + "' has wrong feature dims");
    LDN_REQUIRE(all_finite(r.video) && all_finite(r.audio),
                "dataset: record '" + r.id + "' has non-finite features");
    LDN_REQUIRE(r.frames.has_value() == frames,
                "dataset: frames must be present for all records or none");
    if (r.frames) {
      LDN_REQUIRE(r.frames->rank() == 2 && r.frames->dim(1) == frame_dim(),
                  "dataset: record '" + r.id + "' frames have wrong width");
      LDN_REQUIRE(r.frames->all_finite(),
                  "dataset: record '" + r.id + "' has non-finite frames");
    }
    check_labels(r.noisy_labels, vocabulary_size, r.id);
    if (r.clean_labels) check_labels(*r.clean_labels, vocabulary_size, r.id);
  }
}

void canonicalize(LabelSet& labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ds.validate();
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(ds.vocabulary_size);
  w.u32(ds.video_dim);
  w.u32(ds.audio_dim);
  const bool frames = ds.has_frames();
  w.u8(frames ? 1 : 0);
  w.u64(ds.records.size());
  for (const VideoRecord& r : ds.records) {
    w.u16(static_cast<std::uint16_t>(r.id.size()));
    w.text(r.id);
    for (double v : r.video) w.f32(static_cast<float>(v));
    for (double v : r.audio) w.f32(static_cast<float>(v));
    if (frames) {
      LDN_REQUIRE(r.frames->dim(0) <= 0xFFFFFFFFu, "too many frames");
      w.u32(static_cast<std::uint32_t>(r.frames->dim(0)));
      for (double v : r.frames->data()) w.f32(static_cast<float>(v));
    }
    write_labels(w, r.noisy_labels);
    w.u8(r.clean_labels ? 1 : 0);
    if (r.clean_labels) write_labels(w, *r.clean_labels);
  }
  return w.take();
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size(), "dataset");
  if (r.text(4) != std::string(kMagic, 4)) r.fail("bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
  Dataset ds;
  ds.vocabulary_size = r.u32();
  ds.video_dim = r.u32();
  ds.audio_dim = r.u32();
  if (ds.vocabulary_size == 0) r.fail("empty vocabulary");
  const std::uint8_t frames_flag = r.u8();
  if (frames_flag > 1) r.fail("frames flag must be 0 or 1");
  const std::uint64_t count = r.u64();
  // Each record needs at least its fixed-size fields; reject absurd counts
  // before reserving.
  if (count > bytes.size()) r.fail("record count exceeds file size");
  ds.records.reserve(count);
  std::unordered_set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    VideoRecord rec;
    rec.id = r.text(r.u16());
    if (!seen.insert(rec.id).second) r.fail("duplicate id '" + rec.id + "'");
    rec.video.resize(ds.video_dim);
    for (double& v : rec.video) v = r.f32();
    rec.audio.resize(ds.audio_dim);
    for (double& v : rec.audio) v = r.f32();
    if (frames_flag) {
      const std::uint32_t t = r.u32();
      if (t == 0) r.fail("frame count must be >= 1");
      if (static_cast<std::uint64_t>(t) * ds.frame_dim() * 4 > bytes.size()) {
        r.fail("frame block exceeds file size");
      }
      diff::Tensor f({t, ds.frame_dim()});
      for (double& v : f.data()) v = r.f32();
      rec.frames = std::move(f);
    }
    rec.noisy_labels = read_labels(r, ds.vocabulary_size);
    const std::uint8_t clean_flag = r.u8();
    if (clean_flag > 1) r.fail("clean flag must be 0 or 1");
    if (clean_flag) rec.clean_labels = read_labels(r, ds.vocabulary_size);
    ds.records.push_back(std::move(rec));
  }
  if (!r.at_end()) r.fail("trailing bytes after last record");
  try {
    ds.validate();
  } catch (const InputError& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to '" + path.string() + "'");
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
  write_file_bytes(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file_bytes(path));
}

void write_group_map(const std::filesystem::path& path,
                     const std::map<std::uint32_t, std::string>& groups) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (const auto& [label, name] : groups) out << label << '\t' << name << '\n';
}

std::map<std::uint32_t, std::string> read_group_map(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::map<std::uint32_t, std::string> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::uint32_t label = 0;
    try {
      if (tab == std::string::npos || tab == 0) throw std::invalid_argument("tab");
      std::size_t used = 0;
      const unsigned long v = std::stoul(line.substr(0, tab), &used);
      if (used != tab || v > 0xFFFFFFFFul) throw std::invalid_argument("label");
      label = static_cast<std::uint32_t>(v);
    } catch (const std::exception&) {
      throw FormatError("group map line " + std::to_string(line_no) +
                        ": expected 'label<TAB>group'");
    }
    groups[label] = line.substr(tab + 1);
  }
  return groups;
}

diff::Tensor label_matrix(const Dataset& dataset, bool clean) {
  LDN_REQUIRE(!dataset.records.empty(), "label_matrix: empty dataset");
  diff::Tensor m({dataset.records.size(), dataset.vocabulary_size}, 0.0);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const VideoRecord& r = dataset.records[i];
    LDN_REQUIRE(!clean || r.clean_labels, "label_matrix: record '" + r.id +
                                              "' has no clean labels");
    for (std::uint32_t l : clean ? *r.clean_labels : r.noisy_labels) m.at(i, l) = 1.0;
  }
  return m;
}

}  // namespace ldn::data
