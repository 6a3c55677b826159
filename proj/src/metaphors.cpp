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

#include "twec/metaphors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "twec/csv.hpp"
#include "twec/error.hpp"
#include "twec/keyvalue.hpp"
#include "twec/text.hpp"

namespace twec {

std::string to_string(TermOrder order) { return order == TermOrder::TV ? "TV" : "VT"; }

TermOrder parse_term_order(const std::string& text) {
  const auto t = std::string(trim(text));
  if (t == "TV" || t == "tv") return TermOrder::TV;
  if (t == "VT" || t == "vt") return TermOrder::VT;
  throw ValidationError("order must be TV or VT, got '" + text + "'");
}

namespace {

std::string normalize_term(const std::string& raw, const std::string& what) {
  const std::string t = to_lower_utf8(trim(raw));
  if (t.empty()) throw ValidationError(what + " is empty");
  const auto toks = tokenize(t);
  if (toks.size() != 1 || toks[0] != t)
    throw ValidationError(what + " '" + raw + "' must be a single word");
  return t;
}

std::vector<std::string> surface_nouns(const std::string& surface) {
  auto toks = tokenize(surface);
  if (toks.size() < 2) throw ValidationError("surface '" + surface + "' must contain two nouns");
  return toks;
}

}  // namespace

std::pair<std::string, std::string> resolve_terms(const Metaphor& m) {
  const auto toks = surface_nouns(m.surface);
  const std::string& first = toks.front();
  const std::string& second = toks.back();
  if (m.order == TermOrder::TV) return {first, second};
  return {second, first};
}

bool within_study_window(const Metaphor& m) { return m.year >= 1800 && m.year <= 1950; }

MetaphorSet read_metaphors(std::istream& in, const std::string& source) {
  const auto table = CsvTable::read(in, source);
  table.expect_header(kMetaphorHeader);
  MetaphorSet out;
  std::set<std::string> ids;
  std::map<std::tuple<std::string, std::string, TermOrder>, std::string> triples;
  for (std::size_t r = 0; r < table.rows().size(); ++r) {
    const auto& row = table.rows()[r];
    const std::string where = source + ":" + std::to_string(table.line_of(r)) + ": ";
    try {
      Metaphor m;
      m.id = std::string(trim(row[0]));
      if (m.id.empty()) throw ValidationError("id is empty");
      m.surface = std::string(trim(row[1]));
      m.topic = normalize_term(row[2], "topic");
      m.vehicle = normalize_term(row[3], "vehicle");
      m.order = parse_term_order(row[4]);
      m.author = row[5];
      m.source = row[6];
      const std::string year = std::string(trim(row[7]));
      const bool negative = !year.empty() && year[0] == '-';
      m.year = static_cast<int>(parse_u64(negative ? year.substr(1) : year, "year"));
      if (negative) m.year = -m.year;
      m.has_article = parse_bool(std::string(trim(row[8])), "has_article");
      const auto [topic, vehicle] = resolve_terms(m);
      if (topic != m.topic || vehicle != m.vehicle)
        throw ValidationError("topic/vehicle (" + m.topic + ", " + m.vehicle + ") do not match surface '" +
                              m.surface + "' under order " + to_string(m.order));
      if (!ids.insert(m.id).second) throw ValidationError("duplicate id '" + m.id + "'");
      const auto key = std::make_tuple(m.topic, m.vehicle, m.order);
      if (auto it = triples.find(key); it != triples.end())
        out.warnings.push_back(where + "metaphor '" + m.id + "' repeats (" + m.topic + ", " + m.vehicle +
                               ", " + to_string(m.order) + ") of '" + it->second + "'");
      else
        triples.emplace(key, m.id);
      out.metaphors.push_back(std::move(m));
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

MetaphorSet load_metaphors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open metaphor file " + path.string());
  return read_metaphors(in, path.string());
}

void write_metaphors(std::ostream& out, const std::vector<Metaphor>& metaphors) {
  write_csv_row(out, kMetaphorHeader);
  for (const auto& m : metaphors)
    write_csv_row(out, {m.id, m.surface, m.topic, m.vehicle, to_string(m.order), m.author, m.source,
                        std::to_string(m.year), m.has_article ? "true" : "false"});
}

// ---------------------------------------------------------------------------
// CoNLL-U

namespace {

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) return out;
    start = tab + 1;
  }
}

bool no_space_after(const std::string& misc) {
  if (misc == "_") return false;
  std::size_t start = 0;
  for (;;) {
    const auto bar = misc.find('|', start);
    if (misc.compare(start, bar == std::string::npos ? std::string::npos : bar - start, "SpaceAfter=No") == 0)
      return true;
    if (bar == std::string::npos) return false;
    start = bar + 1;
  }
}

std::string join_tokens(const std::vector<ConlluToken>& tokens, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t t = from; t <= to; ++t) {
    out += tokens[t].form;
    if (t < to && tokens[t].space_after) out.push_back(' ');
  }
  return out;
}

void finish_sentence(ConlluSentence& s, std::size_t ordinal, std::vector<ConlluSentence>& out) {
  if (s.words.empty()) return;
  if (s.sent_id.empty()) s.sent_id = std::to_string(ordinal);
  if (s.text.empty() && !s.tokens.empty()) s.text = join_tokens(s.tokens, 0, s.tokens.size() - 1);
  out.push_back(std::move(s));
}

std::size_t parse_word_id(const std::string& text, const std::string& source, std::size_t line) {
  try {
    return parse_u64(text, "id");
  } catch (const ValidationError&) {
    throw ParseError(source, line, "bad token id '" + text + "'");
  }
}

}  // namespace

std::vector<ConlluSentence> parse_conllu(std::istream& in, const std::string& source) {
  std::vector<ConlluSentence> out;
  ConlluSentence current;
  std::size_t pending_range_end = 0;  // last word id covered by the open multiword token
  std::size_t line_no = 0;
  std::size_t ordinal = 0;
  std::string line;
  auto flush = [&] {
    if (!current.words.empty()) {
      ++ordinal;
      finish_sentence(current, ordinal, out);
    } else if (!current.sent_id.empty() || !current.text.empty()) {
      throw ParseError(source, line_no, "sentence without tokens");
    }
    current = ConlluSentence{};
    pending_range_end = 0;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const auto body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos) {
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        if (key == "sent_id") current.sent_id = std::string(value);
        if (key == "text") current.text = std::string(value);
      }
      continue;
    }
    const auto cols = split_tab(line);
    if (cols.size() != 10)
      throw ParseError(source, line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    const std::string& id = cols[0];
    if (id.find('.') != std::string::npos) continue;  // empty node
    if (const auto dash = id.find('-'); dash != std::string::npos) {
      ConlluToken tok;
      tok.first = parse_word_id(id.substr(0, dash), source, line_no);
      tok.last = parse_word_id(id.substr(dash + 1), source, line_no);
      if (tok.last < tok.first || tok.first != current.words.size() + 1)
        throw ParseError(source, line_no, "bad multiword token range '" + id + "'");
      tok.form = cols[1];
      tok.space_after = !no_space_after(cols[9]);
      current.tokens.push_back(tok);
      pending_range_end = tok.last;
      continue;
    }
    ConlluWord w;
    w.id = parse_word_id(id, source, line_no);
    if (w.id != current.words.size() + 1)
      throw ParseError(source, line_no, "word ids must be consecutive from 1");
    w.form = cols[1];
    w.lemma = cols[2];
    w.upos = cols[3];
    w.misc = cols[9];
    if (w.form.empty() || w.upos.empty()) throw ParseError(source, line_no, "empty FORM or UPOS");
    if (w.id > pending_range_end) {
      current.tokens.push_back({w.id, w.id, w.form, !no_space_after(w.misc)});
    }
    current.words.push_back(std::move(w));
  }
  if (pending_range_end > current.words.size())
    throw ParseError(source, line_no, "multiword token range runs past the sentence end");
  flush();
  return out;
}

KeywordLexicon read_keywords(std::istream& in) {
  KeywordLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lex.insert(to_lower_utf8(t));
  }
  return lex;
}

KeywordLexicon load_keywords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open keyword lexicon " + path.string());
  return read_keywords(in);
}

namespace {

bool is_contracted_di(const std::string& form) {
  static const std::set<std::string> forms = {"del",  "dello", "della", "dell'", "dell’",
                                              "dei",  "degli", "delle", "de'"};
  return forms.count(to_lower_utf8(form)) > 0;
}

// Index of the surface token holding word id `w`.
std::size_t token_of(const ConlluSentence& s, std::size_t w) {
  for (std::size_t t = 0; t < s.tokens.size(); ++t)
    if (s.tokens[t].first <= w && w <= s.tokens[t].last) return t;
  return s.tokens.size();
}

}  // namespace

std::vector<CandidateExtraction> extract_candidates(const std::vector<ConlluSentence>& sentences,
                                                    const KeywordLexicon& keywords, bool allow_article,
                                                    const std::string& source_path) {
  std::vector<CandidateExtraction> out;
  for (const auto& s : sentences) {
    const auto& w = s.words;
    for (std::size_t i = 0; i + 2 < w.size(); ++i) {
      if (w[i].upos != "NOUN" || w[i + 1].upos != "ADP") continue;
      const auto& prep = w[i + 1];
      const std::size_t prep_tok = token_of(s, prep.id);
      const bool in_multiword = prep_tok < s.tokens.size() && s.tokens[prep_tok].first != s.tokens[prep_tok].last;
      const bool contracted = is_contracted_di(prep.form) ||
                              (in_multiword && is_contracted_di(s.tokens[prep_tok].form));
      const bool lemma_di = to_lower_utf8(prep.lemma) == "di";
      if (!lemma_di && !contracted) continue;

      std::size_t noun2 = 0;
      bool article = false;
      if (i + 2 < w.size() && w[i + 2].upos == "DET") {
        if (i + 3 < w.size() && w[i + 3].upos == "NOUN") {
          noun2 = i + 3;
          article = true;
        }
      } else if (i + 2 < w.size() && w[i + 2].upos == "NOUN") {
        noun2 = i + 2;
        article = contracted;
      }
      if (noun2 == 0) continue;
      if (article && !allow_article) continue;

      CandidateExtraction c;
      c.first_noun = {w[i].form, w[i].lemma};
      c.second_noun = {w[noun2].form, w[noun2].lemma};
      c.has_article = article;
      c.sentence_id = s.sent_id;
      c.source_path = source_path;
      const std::size_t t0 = token_of(s, w[i].id);
      const std::size_t t1 = token_of(s, w[noun2].id);
      c.surface = join_tokens(s.tokens, t0, t1);
      if (!keywords.empty()) {
        const std::string l1 = to_lower_utf8(w[i].lemma);
        const std::string l2 = to_lower_utf8(w[noun2].lemma);
        if (keywords.count(l1)) {
          c.matched_keyword = l1;
          c.matched_position = KeywordPosition::First;
        } else if (keywords.count(l2)) {
          c.matched_keyword = l2;
          c.matched_position = KeywordPosition::Second;
        } else {
          continue;
        }
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<CandidateExtraction> extract_candidates(const std::filesystem::path& conllu_path,
                                                    const KeywordLexicon& keywords, bool allow_article) {
  std::ifstream in(conllu_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + conllu_path.string());
  const auto sentences = parse_conllu(in, conllu_path.string());
  return extract_candidates(sentences, keywords, allow_article, conllu_path.string());
}

std::vector<CandidateExtraction> deduplicate(std::vector<CandidateExtraction> candidates) {
  std::set<std::string> seen;
  std::vector<CandidateExtraction> out;
  for (auto& c : candidates)
    if (seen.insert(to_lower_utf8(c.surface)).second) out.push_back(std::move(c));
  return out;
}

void write_candidates(std::ostream& out, const std::vector<CandidateExtraction>& candidates) {
  write_csv_row(out, kCandidateHeader);
  for (const auto& c : candidates)
    write_csv_row(out, {c.surface, c.first_noun.lemma, c.second_noun.lemma, c.matched_keyword.value_or(""),
                        c.source_path, c.sentence_id});
}

void write_annotation_template(std::ostream& out, const std::vector<CandidateExtraction>& candidates) {
  write_csv_row(out, kMetaphorHeader);
  std::size_t n = 0;
  for (const auto& c : candidates) {
    const auto toks = tokenize(c.surface);
    write_csv_row(out, {"c" + std::to_string(++n), c.surface, toks.front(), toks.back(), "TV", "",
                        c.source_path, "0", c.has_article ? "true" : "false"});
  }
}

}  // namespace twec
