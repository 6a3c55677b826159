/*
 * Copyright 2026 The twec-metaphor Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TWEC_KEYVALUE_HPP
#define TWEC_KEYVALUE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace twec {

/// Line-oriented `key = value` records. `#` starts a comment line. Keys may
/// repeat; order is preserved.
class KeyValues {
 public:
  using Entry = std::pair<std::string, std::string>;

  static KeyValues parse(std::istream& in, const std::string& source = "<kv>");
  static KeyValues load(const std::filesystem::path& path);

  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const;
  /// Last value for the key.
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> get_all(const std::string& key) const;

  std::string require(const std::string& key) const;
  std::uint64_t require_u64(const std::string& key) const;
  double require_double(const std::string& key) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  std::string source() const { return source_; }

 private:
  std::vector<Entry> entries_;
  std::string source_ = "<kv>";
};

std::uint64_t parse_u64(const std::string& text, const std::string& what);
double parse_double(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double v);

}  // namespace twec

#endif  // TWEC_KEYVALUE_HPP
