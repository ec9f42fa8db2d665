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

#include "ldn/config_text.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "ldn/error.hpp"

namespace ldn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_integer(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && !s.empty();
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& what) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(what + " line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw FormatError(what + " line " + std::to_string(line_no) + ": empty key");
    }
    LDN_REQUIRE(out.emplace(key, value).second,
                what + " line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return out;
}

const std::string* KeyReader::take(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void KeyReader::bad(const std::string& key, const std::string& value,
                    const std::string& expected) const {
  throw InputError(what_ + ": key '" + key + "' has value '" + value + "', expected " +
                   expected);
}

void KeyReader::read(const std::string& key, std::string& out) {
  if (const std::string* v = take(key)) out = *v;
}

void KeyReader::read(const std::string& key, double& out) {
  const std::string* v = take(key);
  if (!v) return;
  char* end = nullptr;
  const double d = std::strtod(v->c_str(), &end);
  if (v->empty() || end != v->c_str() + v->size() || !std::isfinite(d)) {
    bad(key, *v, "a finite number");
  }
  out = d;
}

void KeyReader::read(const std::string& key, bool& out) {
  const std::string* v = take(key);
  if (!v) return;
  if (*v == "true" || *v == "1") {
    out = true;
  } else if (*v == "false" || *v == "0") {
    out = false;
  } else {
    bad(key, *v, "true or false");
  }
}

void KeyReader::read(const std::string& key, std::uint32_t& out) {
  const std::string* v = take(key);
  if (v && !parse_integer(*v, out)) bad(key, *v, "an unsigned 32-bit integer");
}

void KeyReader::read(const std::string& key, std::uint64_t& out) {
  const std::string* v = take(key);
  if (v && !parse_integer(*v, out)) bad(key, *v, "an unsigned integer");
}

void KeyReader::read(const std::string& key, std::int64_t& out) {
  const std::string* v = take(key);
  if (v && !parse_integer(*v, out)) bad(key, *v, "an integer");
}

void KeyReader::read_choice(const std::string& key, const std::vector<std::string>& choices,
                            std::size_t& index) {
  const std::string* v = take(key);
  if (!v) return;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (*v == choices[i]) {
      index = i;
      return;
    }
  }
  std::string list;
  for (const auto& c : choices) list += (list.empty() ? "" : "|") + c;
  bad(key, *v, "one of " + list);
}

void KeyReader::finish() const {
  for (const auto& [k, v] : values_) {
    LDN_REQUIRE(used_.count(k), what_ + ": unknown key '" + k + "'");
  }
}

void KeyWriter::put(const std::string& key, const std::string& value) {
  text_ += key;
  text_ += " = ";
  text_ += value;
  text_ += '\n';
}

void KeyWriter::put(const std::string& key, double value) { put(key, format_double(value)); }
void KeyWriter::put(const std::string& key, bool value) {
  put(key, std::string(value ? "true" : "false"));
}
void KeyWriter::put(const std::string& key, std::uint64_t value) {
  put(key, std::to_string(value));
}
void KeyWriter::put(const std::string& key, std::int64_t value) {
  put(key, std::to_string(value));
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace ldn
