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

#ifndef LDN_CONFIG_TEXT_HPP_
#define LDN_CONFIG_TEXT_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ldn {

// "key = value" lines; blank lines and lines starting with '#' are skipped.
// A line without '=' is a FormatError, a repeated key an InputError.
std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                    const std::string& what);

// Consumes keys from a parsed config. Each read_* leaves the field alone
// when the key is absent. finish() rejects any key nobody asked for.
class KeyReader {
 public:
  KeyReader(std::map<std::string, std::string> values, std::string what)
      : values_(std::move(values)), what_(std::move(what)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void read(const std::string& key, std::string& out);
  void read(const std::string& key, double& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::uint32_t& out);
  void read(const std::string& key, std::uint64_t& out);
  void read(const std::string& key, std::int64_t& out);
  // One of `choices`; returns its index.
  void read_choice(const std::string& key, const std::vector<std::string>& choices,
                   std::size_t& index);
  void finish() const;

 private:
  const std::string* take(const std::string& key);
  [[noreturn]] void bad(const std::string& key, const std::string& value,
                        const std::string& expected) const;

  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
  std::string what_;
};

// Canonical text builder: one "key = value" line per call, in call order.
class KeyWriter {
 public:
  void put(const std::string& key, const std::string& value);
  void put(const std::string& key, double value);
  void put(const std::string& key, bool value);
  void put(const std::string& key, std::uint64_t value);
  void put(const std::string& key, std::uint32_t value) { put(key, std::uint64_t{value}); }
  void put(const std::string& key, std::int64_t value);
  void put(const std::string& key, const char* value) { put(key, std::string(value)); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace ldn

#endif  // LDN_CONFIG_TEXT_HPP_
