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

#ifndef TWEC_METAPHORS_HPP
#define TWEC_METAPHORS_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace twec {

/// Which noun of the "A di B" surface is the topic.
enum class TermOrder { TV, VT };

std::string to_string(TermOrder order);
TermOrder parse_term_order(const std::string& text);

struct Metaphor {
  std::string id;
  std::string surface;  // e.g. "Capelli di fiamma"
  std::string topic;    // normalised: lowercase single token
  std::string vehicle;
  TermOrder order = TermOrder::TV;
  std::string author;
  std::string source;
  int year = 0;
  bool has_article = false;

  bool operator==(const Metaphor&) const = default;
};

struct MetaphorSet {
  std::vector<Metaphor> metaphors;
  std::vector<std::string> warnings;  // duplicate (topic, vehicle, order) triples
};

inline const std::vector<std::string> kMetaphorHeader = {
    "id", "surface", "topic", "vehicle", "order", "author", "source", "year", "has_article"};

MetaphorSet read_metaphors(std::istream& in, const std::string& source = "<metaphors>");
MetaphorSet load_metaphors(const std::filesystem::path& path);
void write_metaphors(std::ostream& out, const std::vector<Metaphor>& metaphors);

/// (topic, vehicle) read off the surface form: TV takes the first noun as
/// topic, VT the last.
std::pair<std::string, std::string> resolve_terms(const Metaphor& m);

/// True when every year lies in the 1800-1950 extraction window of the study corpus.
bool within_study_window(const Metaphor& m);

// ---------------------------------------------------------------------------
// CoNLL-U

struct ConlluWord {
  std::size_t id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string misc;
};

/// A surface token; multiword tokens ("del" = di + il) span several words.
struct ConlluToken {
  std::size_t first = 0;  // word ids, inclusive
  std::size_t last = 0;
  std::string form;
  bool space_after = true;
};

struct ConlluSentence {
  std::string sent_id;
  std::string text;  // "# text =" comment, or the tokens joined honouring SpaceAfter=No
  std::vector<ConlluWord> words;
  std::vector<ConlluToken> tokens;
};

/// Strict 10-column CoNLL-U. Empty nodes (ids like 3.1) are skipped.
std::vector<ConlluSentence> parse_conllu(std::istream& in, const std::string& source = "<conllu>");

struct NounRef {
  std::string form;
  std::string lemma;
  bool operator==(const NounRef&) const = default;
};

enum class KeywordPosition { None, First, Second };

struct CandidateExtraction {
  std::string surface;
  NounRef first_noun;
  NounRef second_noun;
  std::string sentence_id;
  std::string source_path;
  std::optional<std::string> matched_keyword;
  KeywordPosition matched_position = KeywordPosition::None;
  bool has_article = false;
};

using KeywordLexicon = std::unordered_set<std::string>;

/// One lemma per line, `#` comments, lowercased.
KeywordLexicon read_keywords(std::istream& in);
KeywordLexicon load_keywords(const std::filesystem::path& path);

/// NOUN + di [+ article] + NOUN inside one sentence. Contracted forms (del,
/// della, ...) and di followed by a DET count as the article variant and are
/// only accepted with allow_article. A non-empty lexicon keeps candidates whose
/// first or second noun lemma is listed.
std::vector<CandidateExtraction> extract_candidates(const std::vector<ConlluSentence>& sentences,
                                                    const KeywordLexicon& keywords, bool allow_article,
                                                    const std::string& source_path);

std::vector<CandidateExtraction> extract_candidates(const std::filesystem::path& conllu_path,
                                                    const KeywordLexicon& keywords, bool allow_article);

/// Keeps the first candidate per lowercased surface form.
std::vector<CandidateExtraction> deduplicate(std::vector<CandidateExtraction> candidates);

inline const std::vector<std::string> kCandidateHeader = {
    "surface", "first_noun", "second_noun", "matched_keyword", "source_path", "sentence_id"};

void write_candidates(std::ostream& out, const std::vector<CandidateExtraction>& candidates);

/// Metaphor CSV pre-filled from candidates (TV guess, empty metadata) for manual annotation.
void write_annotation_template(std::ostream& out, const std::vector<CandidateExtraction>& candidates);

}  // namespace twec

#endif  // TWEC_METAPHORS_HPP
