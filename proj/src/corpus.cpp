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

#include "twec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "twec/error.hpp"

namespace twec {

SliceId SliceId::parse(std::string_view name) {
  if (name.empty()) throw ValidationError("empty slice name");
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '=' || c == ',' || c == '/')
      throw ValidationError("invalid character in slice name '" + std::string(name) + "'");
  }
  const auto us = name.find('_');
  if (us == std::string_view::npos) return {std::string(name), {}};
  if (us == 0 || us + 1 == name.size())
    throw ValidationError("slice name '" + std::string(name) + "' must look like EPOCH_GENRE");
  return {std::string(name.substr(0, us)), std::string(name.substr(us + 1))};
}

CorpusSlice make_slice(SliceId id, std::vector<std::vector<std::string>> documents) {
  CorpusSlice slice{std::move(id), std::move(documents), 0};
  for (const auto& doc : slice.documents) slice.token_count += doc.size();
  return slice;
}

CorpusSlice read_slice(std::istream& in, SliceId id, const TokenizerConfig& config,
                       const std::string& source_name) {
  std::vector<std::vector<std::string>> docs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> tokens;
    try {
      tokens = tokenize(line, config);
    } catch (const DecodeError& e) {
      throw DecodeError(source_name + ":" + std::to_string(line_no) + ": invalid UTF-8",
                        offset + e.byte_offset());
    }
    offset += line.size() + 1;
    if (!tokens.empty()) docs.push_back(std::move(tokens));
  }
  return make_slice(std::move(id), std::move(docs));
}

CorpusSlice load_slice(const std::filesystem::path& path, SliceId id, const TokenizerConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open corpus file " + path.string());
  return read_slice(in, std::move(id), config, path.string());
}

void write_slice(std::ostream& out, const CorpusSlice& slice) {
  for (const auto& doc : slice.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) out << ' ';
      out << doc[i];
    }
    out << '\n';
  }
}

std::optional<Vocabulary::Index> Vocabulary::find(std::string_view word) const {
  const auto it = lookup_.find(std::string(word));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

Vocabulary::Index Vocabulary::index(std::string_view word) const {
  if (auto i = find(word)) return *i;
  throw VocabularyMiss(std::string(word));
}

std::optional<std::size_t> Vocabulary::slice_position(const SliceId& id) const {
  const auto it = std::find(slices_.begin(), slices_.end(), id);
  if (it == slices_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - slices_.begin());
}

std::size_t Vocabulary::require_slice(const SliceId& id) const {
  if (auto p = slice_position(id)) return *p;
  throw DataError("slice '" + id.name() + "' is not part of the vocabulary");
}

void Vocabulary::index_words() {
  lookup_.clear();
  lookup_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!lookup_.emplace(words_[i], static_cast<Index>(i)).second)
      throw ValidationError("duplicate vocabulary word '" + words_[i] + "'");
  }
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> words,
                                  std::vector<std::uint64_t> global_counts,
                                  std::vector<SliceId> slices,
                                  std::vector<std::vector<std::uint64_t>> slice_counts,
                                  std::vector<std::uint64_t> slice_totals, std::size_t min_count) {
  const std::size_t v = words.size();
  if (global_counts.size() != v || slice_counts.size() != slices.size() ||
      slice_totals.size() != slices.size())
    throw ValidationError("vocabulary parts have inconsistent sizes");
  for (const auto& sc : slice_counts)
    if (sc.size() != v) throw ValidationError("vocabulary slice counts have inconsistent sizes");
  for (std::size_t i = 0; i < v; ++i) {
    std::uint64_t sum = 0;
    for (const auto& sc : slice_counts) sum += sc[i];
    if (sum != global_counts[i])
      throw ValidationError("slice counts of '" + words[i] + "' do not sum to its global count");
    if (global_counts[i] < min_count)
      throw ValidationError("word '" + words[i] + "' is below min_count");
  }
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto sum = std::accumulate(slice_counts[s].begin(), slice_counts[s].end(), std::uint64_t{0});
    if (sum > slice_totals[s])
      throw ValidationError("word counts of slice '" + slices[s].name() + "' exceed its token total");
  }
  Vocabulary vocab;
  vocab.words_ = std::move(words);
  vocab.global_counts_ = std::move(global_counts);
  vocab.slices_ = std::move(slices);
  vocab.slice_counts_ = std::move(slice_counts);
  vocab.slice_totals_ = std::move(slice_totals);
  vocab.min_count_ = min_count;
  vocab.index_words();
  return vocab;
}

Vocabulary build_vocab(std::span<const CorpusSlice> slices, std::size_t min_count) {
  if (slices.empty()) throw ValidationError("build_vocab needs at least one slice");
  if (min_count < 1) throw ValidationError("min_count must be at least 1");
  std::set<SliceId> seen;
  for (const auto& s : slices)
    if (!seen.insert(s.id).second) throw ValidationError("duplicate slice '" + s.id.name() + "'");

  std::unordered_map<std::string, std::vector<std::uint64_t>> counts;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    for (const auto& doc : slices[s].documents) {
      for (const auto& tok : doc) {
        auto& row = counts[tok];
        if (row.empty()) row.assign(slices.size(), 0);
        ++row[s];
      }
    }
  }

  struct Entry {
    const std::string* word;
    std::uint64_t total;
    const std::vector<std::uint64_t>* per_slice;
  };
  std::vector<Entry> kept;
  for (const auto& [word, row] : counts) {
    const auto total = std::accumulate(row.begin(), row.end(), std::uint64_t{0});
    if (total >= min_count) kept.push_back({&word, total, &row});
  }
  std::sort(kept.begin(), kept.end(), [](const Entry& a, const Entry& b) {
    if (a.total != b.total) return a.total > b.total;
    return *a.word < *b.word;
  });

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.words_.reserve(kept.size());
  vocab.global_counts_.reserve(kept.size());
  vocab.slice_counts_.assign(slices.size(), std::vector<std::uint64_t>(kept.size(), 0));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    vocab.words_.push_back(*kept[i].word);
    vocab.global_counts_.push_back(kept[i].total);
    for (std::size_t s = 0; s < slices.size(); ++s) vocab.slice_counts_[s][i] = (*kept[i].per_slice)[s];
  }
  for (const auto& s : slices) {
    vocab.slices_.push_back(s.id);
    vocab.slice_totals_.push_back(s.token_count);
  }
  vocab.index_words();
  return vocab;
}

std::optional<double> relative_log_frequency(std::string_view word, const SliceId& slice,
                                             const Vocabulary& vocab) {
  const auto w = vocab.index(word);
  const auto pos = vocab.require_slice(slice);
  const auto total = vocab.slice_total(pos);
  if (total == 0) throw DataError("slice '" + slice.name() + "' has no tokens");
  const auto count = vocab.slice_count(w, pos);
  if (count == 0) return std::nullopt;
  return std::log(static_cast<double>(count) / static_cast<double>(total));
}

void write_vocab_dump(std::ostream& out, const Vocabulary& vocab) {
  out << "word\tglobal_count";
  for (const auto& s : vocab.slices()) out << '\t' << s.name();
  out << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto idx = static_cast<Vocabulary::Index>(i);
    out << vocab.word(idx) << '\t' << vocab.global_count(idx);
    for (std::size_t s = 0; s < vocab.slices().size(); ++s) out << '\t' << vocab.slice_count(idx, s);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::uint64_t parse_count(const std::string& s, const std::string& source, std::size_t line) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw ParseError(source, line, "bad count '" + s + "'");
  return v;
}

}  // namespace

Vocabulary read_vocab_dump(std::istream& in, const std::vector<std::uint64_t>& slice_totals,
                           std::size_t min_count, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_tabs(line);
  if (header.size() < 2 || header[0] != "word" || header[1] != "global_count")
    throw ParseError(source_name, 1, "header must start with word<TAB>global_count");
  std::vector<SliceId> slices;
  for (std::size_t i = 2; i < header.size(); ++i) slices.push_back(SliceId::parse(header[i]));
  if (slice_totals.size() != slices.size())
    throw ValidationError(source_name + ": slice totals do not match header");

  std::vector<std::string> words;
  std::vector<std::uint64_t> globals;
  std::vector<std::vector<std::uint64_t>> per_slice(slices.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != header.size())
      throw ParseError(source_name, line_no, "expected " + std::to_string(header.size()) + " columns");
    words.push_back(cols[0]);
    globals.push_back(parse_count(cols[1], source_name, line_no));
    for (std::size_t s = 0; s < slices.size(); ++s)
      per_slice[s].push_back(parse_count(cols[2 + s], source_name, line_no));
  }
  return Vocabulary::from_parts(std::move(words), std::move(globals), std::move(slices),
                                std::move(per_slice), slice_totals, min_count);
}

}  // namespace twec
