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

#include "twec/keyvalue.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "twec/error.hpp"
#include "twec/text.hpp"

namespace twec {

KeyValues KeyValues::parse(std::istream& in, const std::string& source) {
  KeyValues kv;
  kv.source_ = source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    const auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    kv.add(std::string(key), std::string(trim(t.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse(in, path.string());
}

void KeyValues::set(const std::string& key, std::string value) {
  for (auto& e : entries_)
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  add(key, std::move(value));
}

bool KeyValues::has(const std::string& key) const { return get(key).has_value(); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
  std::optional<std::string> out;
  for (const auto& e : entries_)
    if (e.first == key) out = e.second;
  return out;
}

std::vector<std::string> KeyValues::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.first == key) out.push_back(e.second);
  return out;
}

std::string KeyValues::require(const std::string& key) const {
  if (auto v = get(key)) return *v;
  throw ValidationError(source_ + ": missing key '" + key + "'");
}

std::uint64_t KeyValues::require_u64(const std::string& key) const {
  return parse_u64(require(key), source_ + ": " + key);
}

double KeyValues::require_double(const std::string& key) const {
  return parse_double(require(key), source_ + ": " + key);
}

void KeyValues::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write(out);
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty())
    throw ValidationError(what + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty())
    throw ValidationError(what + ": expected a number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = to_lower_utf8(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ValidationError(what + ": expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace twec
