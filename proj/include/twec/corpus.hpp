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

#ifndef TWEC_CORPUS_HPP
#define TWEC_CORPUS_HPP

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twec/text.hpp"

namespace twec {

/// One epoch x genre partition, e.g. {"e19", "lit"}. Its canonical name is
/// "<epoch>_<genre>".
struct SliceId {
  std::string epoch;
  std::string genre;

  std::string name() const { return genre.empty() ? epoch : epoch + "_" + genre; }

  /// Splits at the first underscore; a name without one has an empty genre.
  static SliceId parse(std::string_view name);

  auto operator<=>(const SliceId&) const = default;
};

struct CorpusSlice {
  SliceId id;
  std::vector<std::vector<std::string>> documents;
  std::uint64_t token_count = 0;
};

CorpusSlice make_slice(SliceId id, std::vector<std::vector<std::string>> documents);

/// One document per line; blank lines are skipped.
CorpusSlice load_slice(const std::filesystem::path& path, SliceId id,
                       const TokenizerConfig& config = {});

CorpusSlice read_slice(std::istream& in, SliceId id, const TokenizerConfig& config = {},
                       const std::string& source_name = "<stream>");

void write_slice(std::ostream& out, const CorpusSlice& slice);

/// Shared vocabulary over every slice of a study. Immutable once built.
class Vocabulary {
 public:
  using Index = std::uint32_t;

  Vocabulary() = default;

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  std::size_t min_count() const noexcept { return min_count_; }

  const std::string& word(Index i) const { return words_.at(i); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  std::optional<Index> find(std::string_view word) const;
  /// Throws VocabularyMiss.
  Index index(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word).has_value(); }

  std::uint64_t global_count(Index i) const { return global_counts_.at(i); }
  const std::vector<std::uint64_t>& global_counts() const noexcept { return global_counts_; }

  const std::vector<SliceId>& slices() const noexcept { return slices_; }
  std::optional<std::size_t> slice_position(const SliceId& id) const;
  std::size_t require_slice(const SliceId& id) const;

  std::uint64_t slice_count(Index word, std::size_t slice_pos) const {
    return slice_counts_.at(slice_pos).at(word);
  }
  const std::vector<std::uint64_t>& slice_counts(std::size_t slice_pos) const {
    return slice_counts_.at(slice_pos);
  }
  /// All tokens of the slice, including those below min_count.
  std::uint64_t slice_total(std::size_t slice_pos) const { return slice_totals_.at(slice_pos); }

  /// Assembles a vocabulary from already-counted parts (used by the loaders).
  /// Validates ordering, uniqueness and count conservation.
  static Vocabulary from_parts(std::vector<std::string> words,
                               std::vector<std::uint64_t> global_counts,
                               std::vector<SliceId> slices,
                               std::vector<std::vector<std::uint64_t>> slice_counts,
                               std::vector<std::uint64_t> slice_totals, std::size_t min_count);

 private:
  friend Vocabulary build_vocab(std::span<const CorpusSlice> slices, std::size_t min_count);

  void index_words();

  std::vector<std::string> words_;
  std::unordered_map<std::string, Index> lookup_;
  std::vector<std::uint64_t> global_counts_;
  std::vector<SliceId> slices_;
  std::vector<std::vector<std::uint64_t>> slice_counts_;  // [slice][word]
  std::vector<std::uint64_t> slice_totals_;
  std::size_t min_count_ = 1;
};

/// Keeps words whose count over all slices reaches min_count, ordered by
/// descending count with lexicographic tie-break.
Vocabulary build_vocab(std::span<const CorpusSlice> slices, std::size_t min_count = 5);

/// ln(count / slice tokens). nullopt when the word never occurs in the slice;
/// VocabularyMiss when the word is unknown.
std::optional<double> relative_log_frequency(std::string_view word, const SliceId& slice,
                                             const Vocabulary& vocab);

/// word<TAB>global_count<TAB>count per slice, with a header row naming the slices.
void write_vocab_dump(std::ostream& out, const Vocabulary& vocab);

/// Reads the dump back; totals and min_count are stored alongside the compass.
Vocabulary read_vocab_dump(std::istream& in, const std::vector<std::uint64_t>& slice_totals,
                           std::size_t min_count, const std::string& source_name = "<vocab>");

}  // namespace twec

#endif  // TWEC_CORPUS_HPP
