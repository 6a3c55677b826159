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

#ifndef TWEC_CSV_HPP
#define TWEC_CSV_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twec {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and newlines.
class CsvTable {
 public:
  static CsvTable read(std::istream& in, const std::string& source = "<csv>");

  const CsvRow& header() const noexcept { return header_; }
  const std::vector<CsvRow>& rows() const noexcept { return rows_; }
  /// Data line number (1-based, header is line 1) of row i, for messages.
  std::size_t line_of(std::size_t i) const { return lines_.at(i); }

  /// Throws ValidationError unless the header equals `expected` exactly.
  void expect_header(const std::vector<std::string>& expected) const;

  const std::string& source() const noexcept { return source_; }

 private:
  CsvRow header_;
  std::vector<CsvRow> rows_;
  std::vector<std::size_t> lines_;
  std::string source_;
};

void write_csv_row(std::ostream& out, const CsvRow& row);
std::string csv_escape(std::string_view field);

/// Fixed 6-significant-digit rendering; missing values render as NA.
std::string format_measure(std::optional<double> v);
std::optional<double> parse_measure(const std::string& field, const std::string& what);

}  // namespace twec

#endif  // TWEC_CSV_HPP
