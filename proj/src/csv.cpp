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

#include "twec/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <iterator>
#include <ostream>

#include "twec/error.hpp"

namespace twec {

CsvTable CsvTable::read(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source_ = source;
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  bool have_header = false;
  while (i < n) {
    CsvRow row;
    const std::size_t row_line = line;
    std::string field;
    bool row_done = false;
    while (!row_done) {
      field.clear();
      if (i < n && text[i] == '"') {
        ++i;
        for (;;) {
          if (i >= n) throw ParseError(source, row_line, "unterminated quoted field");
          const char c = text[i++];
          if (c == '"') {
            if (i < n && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
          throw ParseError(source, line, "unexpected character after closing quote");
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          if (text[i] == '"') throw ParseError(source, line, "stray quote in unquoted field");
          field.push_back(text[i++]);
        }
      }
      row.push_back(field);
      if (i >= n) {
        row_done = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') ++i;
        ++line;
        row_done = true;
      }
    }
    const bool blank = row.size() == 1 && row[0].empty();
    if (blank) continue;
    if (!have_header) {
      table.header_ = std::move(row);
      have_header = true;
    } else {
      if (row.size() != table.header_.size())
        throw ParseError(source, row_line,
                         "expected " + std::to_string(table.header_.size()) + " fields, found " +
                             std::to_string(row.size()));
      table.rows_.push_back(std::move(row));
      table.lines_.push_back(row_line);
    }
  }
  if (!have_header) throw ParseError(source, 1, "missing header row");
  return table;
}

void CsvTable::expect_header(const std::vector<std::string>& expected) const {
  if (header_ == expected) return;
  std::string want;
  for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
  throw ValidationError(source_ + ": header must be '" + want + "'");
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << '\n';
}

std::string format_measure(std::optional<double> v) {
  if (!v) return "NA";
  char buf[32];
  // collapse negative zero so the text form is stable
  const double x = *v == 0.0 ? 0.0 : *v;
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::optional<double> parse_measure(const std::string& field, const std::string& what) {
  if (field == "NA") return std::nullopt;
  double v = 0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size() || field.empty() || !std::isfinite(v))
    throw ValidationError(what + ": expected a number or NA, got '" + field + "'");
  return v;
}

}  // namespace twec
