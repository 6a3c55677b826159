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

#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "test_util.hpp"
#include "twec/error.hpp"
#include "twec/text.hpp"

namespace twec {
namespace {

const std::filesystem::path kFixtures = TWEC_FIXTURES;
const std::filesystem::path kData = TWEC_DATA;

struct Expected {
  std::string sentence_id, surface, first_lemma, second_lemma;
  bool has_article;
};

std::vector<Expected> load_expected() {
  std::ifstream in(kFixtures / "extraction_expected.tsv");
  std::vector<Expected> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Expected e;
    std::string art;
    std::getline(ls, e.sentence_id, '\t');
    std::getline(ls, e.surface, '\t');
    std::getline(ls, e.first_lemma, '\t');
    std::getline(ls, e.second_lemma, '\t');
    std::getline(ls, art, '\t');
    e.has_article = art == "true";
    out.push_back(e);
  }
  return out;
}

using Key = std::tuple<std::string, std::string, std::string, std::string, bool>;

std::set<Key> keys_of(const std::vector<CandidateExtraction>& cs) {
  std::set<Key> out;
  for (const auto& c : cs)
    out.insert({c.sentence_id, to_lower_utf8(c.surface), c.first_noun.lemma, c.second_noun.lemma, c.has_article});
  return out;
}

const char* kHeader = "id,surface,topic,vehicle,order,author,source,year,has_article\n";

TEST(Conllu, ParsesMultiwordTokensAndSpacing) {
  std::istringstream in(
      "# sent_id = x1\n"
      "1\tI\til\tDET\t_\t_\t2\tdet\t_\t_\n"
      "2\tcapelli\tcapello\tNOUN\t_\t_\t0\troot\t_\t_\n"
      "3-4\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "3\tdi\tdi\tADP\t_\t_\t5\tcase\t_\t_\n"
      "4\til\til\tDET\t_\t_\t5\tdet\t_\t_\n"
      "5\tsole\tsole\tNOUN\t_\t_\t2\tnmod\t_\tSpaceAfter=No\n"
      "6\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n"
      "\n");
  const auto s = parse_conllu(in);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].sent_id, "x1");
  EXPECT_EQ(s[0].words.size(), 6u);
  EXPECT_EQ(s[0].tokens.size(), 5u);
  EXPECT_EQ(s[0].text, "I capelli del sole.");
  const auto with = extract_candidates(s, {}, true, "mem");
  ASSERT_EQ(with.size(), 1u);
  EXPECT_EQ(with[0].surface, "capelli del sole");
  EXPECT_TRUE(with[0].has_article);
  EXPECT_TRUE(extract_candidates(s, {}, false, "mem").empty());
}

TEST(Conllu, RejectsMalformedLines) {
  std::istringstream short_line("1\tcasa\tcasa\tNOUN\n\n");
  EXPECT_THROW(parse_conllu(short_line), ParseError);
  std::istringstream gap("1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\n3\tb\tb\tNOUN\t_\t_\t1\tx\t_\t_\n\n");
  EXPECT_THROW(parse_conllu(gap), ParseError);
}

TEST(Extraction, MatchesHandAnnotation) {
  const auto found = extract_candidates(kFixtures / "extraction.conllu", {}, true);
  std::set<Key> expected;
  for (const auto& e : load_expected())
    expected.insert({e.sentence_id, to_lower_utf8(e.surface), e.first_lemma, e.second_lemma, e.has_article});
  const auto got = keys_of(found);
  for (const auto& k : expected) EXPECT_TRUE(got.count(k)) << "missed " << std::get<0>(k) << " " << std::get<1>(k);
  for (const auto& k : got) EXPECT_TRUE(expected.count(k)) << "spurious " << std::get<0>(k) << " " << std::get<1>(k);
}

TEST(Extraction, ArticleVariantsNeedOptIn) {
  const auto all = extract_candidates(kFixtures / "extraction.conllu", {}, true);
  const auto plain = extract_candidates(kFixtures / "extraction.conllu", {}, false);
  std::size_t articles = 0;
  for (const auto& c : all) articles += c.has_article;
  EXPECT_GT(articles, 0u);
  EXPECT_EQ(plain.size(), all.size() - articles);
  for (const auto& c : plain) EXPECT_FALSE(c.has_article);
}

TEST(Extraction, KeywordFilterKeepsMatchesOnly) {
  const auto lex = load_keywords(kData / "keywords.txt");
  EXPECT_TRUE(lex.count("cuore"));
  EXPECT_FALSE(lex.count("# human body parts"));
  const auto all = extract_candidates(kFixtures / "extraction.conllu", {}, true);
  const auto kept = extract_candidates(kFixtures / "extraction.conllu", lex, true);
  std::size_t expected = 0;
  for (const auto& c : all) expected += lex.count(c.first_noun.lemma) || lex.count(c.second_noun.lemma);
  EXPECT_EQ(kept.size(), expected);
  for (const auto& c : kept) {
    ASSERT_TRUE(c.matched_keyword);
    const auto& lemma = c.matched_position == KeywordPosition::First ? c.first_noun.lemma : c.second_noun.lemma;
    EXPECT_EQ(*c.matched_keyword, lemma);
  }
}

TEST(Extraction, DeduplicateKeepsFirstSurface) {
  std::vector<CandidateExtraction> cs(3);
  cs[0].surface = "Mare di stelle";
  cs[0].sentence_id = "a";
  cs[1].surface = "mare di stelle";
  cs[1].sentence_id = "b";
  cs[2].surface = "cuore di pietra";
  const auto d = deduplicate(cs);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].sentence_id, "a");
}

TEST(Extraction, TemplateIsAValidMetaphorFile) {
  const auto all = deduplicate(extract_candidates(kFixtures / "extraction.conllu", {}, false));
  std::stringstream ss;
  write_annotation_template(ss, all);
  const auto set = read_metaphors(ss);
  EXPECT_EQ(set.metaphors.size(), all.size());
}

TEST(Keywords, CommentsAndCase) {
  std::istringstream in("# header\nCuore\n\n  mare  \n# trailing\n");
  const auto lex = read_keywords(in);
  EXPECT_EQ(lex, (KeywordLexicon{"cuore", "mare"}));
}

TEST(MetaphorCsv, ReadsAndNormalises) {
  std::istringstream in(std::string(kHeader) +
                        "m1,Capelli di fiamma,Capelli,fiamma,TV,D'Annunzio,Alcyone,1903,false\n"
                        "m2,\"Mare di stelle\",stelle,mare,VT,,,1890,false\n");
  const auto set = read_metaphors(in);
  ASSERT_EQ(set.metaphors.size(), 2u);
  EXPECT_EQ(set.metaphors[0].topic, "capelli");
  EXPECT_EQ(set.metaphors[1].topic, "stelle");
  EXPECT_EQ(set.metaphors[1].vehicle, "mare");
  EXPECT_EQ(set.metaphors[1].order, TermOrder::VT);
  EXPECT_TRUE(set.warnings.empty());
  std::stringstream again;
  write_metaphors(again, set.metaphors);
  EXPECT_EQ(read_metaphors(again).metaphors, set.metaphors);
}

TEST(MetaphorCsv, ValidationErrors) {
  auto fails = [](const std::string& row) {
    std::istringstream in(std::string(kHeader) + row);
    EXPECT_THROW(read_metaphors(in), ValidationError) << row;
  };
  fails("m1,Capelli di fiamma,capelli,fiamma,XY,,,1903,false\n");
  fails("m1,Capelli di fiamma,fiamma,capelli,TV,,,1903,false\n");
  fails("m1,Capelli di fiamma,capelli rossi,fiamma,TV,,,1903,false\n");
  fails(",Capelli di fiamma,capelli,fiamma,TV,,,1903,false\n");
  fails("m1,Capelli di fiamma,capelli,fiamma,TV,,,abc,false\n");
  fails("m1,Capelli di fiamma,capelli,fiamma,TV,,,1903,maybe\n");
  fails("m1,Capelli di fiamma,capelli,fiamma,TV,,,1903,false\nm1,Mare di stelle,mare,stelle,TV,,,1900,false\n");
  std::istringstream bad_header("id,surface\nm1,x\n");
  EXPECT_THROW(read_metaphors(bad_header), ValidationError);
}

TEST(MetaphorCsv, DuplicateTriplesWarn) {
  std::istringstream in(std::string(kHeader) +
                        "m1,Capelli di fiamma,capelli,fiamma,TV,,,1903,false\n"
                        "m2,capelli di fiamma,capelli,fiamma,TV,,,1910,false\n");
  const auto set = read_metaphors(in);
  EXPECT_EQ(set.metaphors.size(), 2u);
  ASSERT_EQ(set.warnings.size(), 1u);
  EXPECT_NE(set.warnings[0].find("m1"), std::string::npos);
}

TEST(MetaphorCsv, StudyWindow) {
  Metaphor m;
  m.year = 1800;
  EXPECT_TRUE(within_study_window(m));
  m.year = 1951;
  EXPECT_FALSE(within_study_window(m));
}

TEST(TermOrder, ParseAndPrint) {
  EXPECT_EQ(parse_term_order("VT"), TermOrder::VT);
  EXPECT_EQ(to_string(TermOrder::TV), "TV");
  EXPECT_THROW(parse_term_order("tv2"), ValidationError);
}

}  // namespace
}  // namespace twec
