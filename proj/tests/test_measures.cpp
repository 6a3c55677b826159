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

#include "twec/measures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "twec/error.hpp"

namespace twec {
namespace {

// Full scan in double precision, the definition the index must reproduce.
std::vector<Neighbor> naive_top_k(const SliceEmbeddings& m, WordIndex q, std::size_t k) {
  auto norm = [&](WordIndex w) {
    double s = 0;
    for (float v : m.context.row(w)) s += double(v) * v;
    return std::sqrt(s);
  };
  std::vector<Neighbor> all;
  const double nq = norm(q);
  for (WordIndex w = 0; w < m.context.rows(); ++w) {
    if (w == q || !m.is_trained(w) || norm(w) == 0.0) continue;
    double dot = 0;
    for (std::size_t d = 0; d < m.context.cols(); ++d) dot += double(m.context(q, d)) * m.context(w, d);
    all.push_back({w, std::clamp(dot / (nq * norm(w)), -1.0, 1.0)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.cosine != b.cosine ? a.cosine > b.cosine : a.word < b.word;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::shared_ptr<const Vocabulary> make_vocab(std::size_t n, const std::vector<SliceId>& slices) {
  std::vector<std::string> words;
  std::vector<std::uint64_t> global;
  std::vector<std::vector<std::uint64_t>> counts(slices.size());
  std::vector<std::uint64_t> totals(slices.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    words.push_back("v" + std::to_string(1000 + i));
    global.push_back(0);
    for (std::size_t s = 0; s < slices.size(); ++s) {
      const std::uint64_t c = 10 + (i * 7 + s * 3) % 5;
      counts[s].push_back(c);
      global.back() += c;
      totals[s] += c;
    }
  }
  for (auto& t : totals) t += 100;
  return std::make_shared<const Vocabulary>(
      Vocabulary::from_parts(words, global, slices, counts, totals, 1));
}

SliceEmbeddings random_model(std::shared_ptr<const Vocabulary> vocab, const SliceId& id, std::size_t dim,
                             std::uint64_t seed, std::uint64_t fingerprint = 42) {
  Rng rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  SliceEmbeddings m;
  m.slice = id;
  m.vocab = vocab;
  m.context = Matrix(vocab->size(), dim);
  for (std::size_t r = 0; r < vocab->size(); ++r)
    for (auto& v : m.context.row(r)) v = n(rng);
  m.trained.assign(vocab->size(), true);
  m.compass_fingerprint = fingerprint;
  return m;
}

const SliceId kE19{"e19", "lit"};
const SliceId kE21{"e21", "lit"};

TEST(Cosine, KnownValues) {
  const std::vector<float> a{1, 0, 0}, b{0, 2, 0}, c{-3, 0, 0}, d{1, 1, 0};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine(a, c), -1.0);
  EXPECT_NEAR(cosine(a, d), 1.0 / std::sqrt(2.0), 1e-15);
  const std::vector<float> z{0, 0, 0};
  EXPECT_THROW(cosine(a, z), UndefinedStatistic);
  const std::vector<float> shorter{1, 0};
  EXPECT_THROW(cosine(a, shorter), ValidationError);
}

TEST(Cosine, StaysInRangeForParallelVectors) {
  Rng rng(1);
  std::uniform_real_distribution<float> u(-1e3f, 1e3f);
  for (int i = 0; i < 1000; ++i) {
    std::vector<float> a(50);
    for (auto& v : a) v = u(rng);
    std::vector<float> b = a;
    for (auto& v : b) v *= 3.0f;
    const double c = cosine(a, b);
    EXPECT_LE(c, 1.0);
    EXPECT_GE(c, 1.0 - 1e-6);
  }
}

TEST(NeighborIndex, MatchesFullScan) {
  const auto vocab = make_vocab(700, {kE19});
  auto m = random_model(vocab, kE19, 24, 3);
  // untrained, zero and duplicated rows
  for (WordIndex w : {5u, 77u, 400u}) m.trained[w] = false;
  for (auto& v : m.context.row(9)) v = 0.0f;
  for (std::size_t d = 0; d < 24; ++d) {
    m.context(20, d) = m.context(10, d);
    m.context(30, d) = 2.0f * m.context(10, d);
  }
  const NeighborIndex index(m);
  EXPECT_EQ(index.eligible_count(), 700u - 4u);
  std::vector<WordIndex> queries;
  for (WordIndex q = 0; q < 700; q += 7)
    if (m.trained[q] && q != 9) queries.push_back(q);
  queries.push_back(10);
  for (std::size_t k : {1u, 10u, 150u}) {
    const auto lists = index.query_batch(queries, k);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto expected = naive_top_k(m, queries[i], k);
      ASSERT_EQ(lists[i].neighbors.size(), expected.size());
      for (std::size_t j = 0; j < expected.size(); ++j) {
        EXPECT_EQ(lists[i].neighbors[j].word, expected[j].word) << "query " << queries[i] << " rank " << j;
        EXPECT_NEAR(lists[i].neighbors[j].cosine, expected[j].cosine, 1e-12);
      }
      EXPECT_FALSE(lists[i].truncated);
    }
  }
}

TEST(NeighborIndex, TiesBreakByIndex) {
  const auto vocab = make_vocab(6, {kE19});
  SliceEmbeddings m = random_model(vocab, kE19, 2, 1);
  const float rows[6][2] = {{1, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 1}, {0, 0.5f}};
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t d = 0; d < 2; ++d) m.context(r, d) = rows[r][d];
  const auto list = NeighborIndex(m).query(1, 3);
  ASSERT_EQ(list.neighbors.size(), 3u);
  EXPECT_EQ(list.neighbors[0].word, 2u);
  EXPECT_EQ(list.neighbors[1].word, 3u);
  EXPECT_EQ(list.neighbors[2].word, 5u);
}

TEST(NeighborIndex, TruncatesSmallVocabularies) {
  const auto vocab = make_vocab(5, {kE19});
  const auto m = random_model(vocab, kE19, 4, 2);
  const auto list = NeighborIndex(m).query(0, 10);
  EXPECT_EQ(list.neighbors.size(), 4u);
  EXPECT_TRUE(list.truncated);
  EXPECT_FALSE(NeighborIndex(m).query(0, 4).truncated);
}

TEST(NeighborIndex, RejectsBadQueries) {
  const auto vocab = make_vocab(5, {kE19});
  auto m = random_model(vocab, kE19, 4, 2);
  m.trained[1] = false;
  for (auto& v : m.context.row(2)) v = 0.0f;
  const NeighborIndex index(m);
  EXPECT_THROW(index.query(1, 2), DataError);
  EXPECT_THROW(index.query(2, 2), UndefinedStatistic);
  EXPECT_THROW(index.query(0, 0), ValidationError);
  EXPECT_THROW(nearest_neighbors("nope", m, 2), VocabularyMiss);
}

TEST(Snd, MeanOfNeighbourCosines) {
  const auto vocab = make_vocab(300, {kE19});
  auto m = random_model(vocab, kE19, 8, 4);
  const std::string word = vocab->word(17);
  const auto expected = naive_top_k(m, 17, 25);
  double sum = 0;
  for (const auto& n : expected) sum += n.cosine;
  const auto r = snd(word, m, 25);
  ASSERT_TRUE(r.value);
  EXPECT_NEAR(*r.value, sum / 25.0, 1e-12);
  EXPECT_EQ(r.neighbors_used, 25u);
  EXPECT_FALSE(r.truncated);

  m.trained[17] = false;
  EXPECT_FALSE(snd(word, m, 25).value);

  const auto small = snd(vocab->word(3), m, 1000);
  EXPECT_TRUE(small.truncated);
  EXPECT_EQ(small.neighbors_used, 298u);
}

TEST(TopicVehicleSimilarity, NaWhenUntrained) {
  const auto vocab = make_vocab(10, {kE19});
  auto m = random_model(vocab, kE19, 4, 5);
  Metaphor met;
  met.id = "m1";
  met.topic = vocab->word(1);
  met.vehicle = vocab->word(2);
  const auto cs = topic_vehicle_similarity(met, m);
  ASSERT_TRUE(cs);
  EXPECT_DOUBLE_EQ(*cs, cosine(m.context.row(1), m.context.row(2)));
  m.trained[2] = false;
  EXPECT_FALSE(topic_vehicle_similarity(met, m));
}

TEST(VectorCoherence, RequiresSharedCompass) {
  const auto vocab = make_vocab(10, {kE19, kE21});
  const auto a = random_model(vocab, kE19, 4, 1, 0xabcULL);
  const auto b = random_model(vocab, kE21, 4, 2, 0xabcULL);
  const auto c = random_model(vocab, kE21, 4, 2, 0xdefULL);
  const auto vc = vector_coherence(vocab->word(3), a, b);
  ASSERT_TRUE(vc);
  EXPECT_DOUBLE_EQ(*vc, cosine(a.context.row(3), b.context.row(3)));
  try {
    vector_coherence(vocab->word(3), a, c);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(hex64(0xabcULL)), std::string::npos) << msg;
    EXPECT_NE(msg.find(hex64(0xdefULL)), std::string::npos) << msg;
  }
}

TEST(Roles, ParseAndPrint) {
  EXPECT_EQ(parse_role("topic"), Role::Topic);
  EXPECT_EQ(parse_role(to_string(Role::Vehicle)), Role::Vehicle);
  EXPECT_THROW(parse_role("tenor"), ValidationError);
}

struct Study {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<SliceEmbeddings> models;
  std::vector<Metaphor> metaphors;
};

Study small_study() {
  const SliceId e19n{"e19", "news"}, e21n{"e21", "news"};
  Study s;
  s.vocab = make_vocab(60, {kE19, e19n, kE21, e21n});
  std::uint64_t seed = 1;
  for (const auto& id : {kE21, e21n, kE19, e19n}) s.models.push_back(random_model(s.vocab, id, 6, seed++));
  auto met = [&](const std::string& id, std::size_t t, std::size_t v) {
    Metaphor m;
    m.id = id;
    m.topic = s.vocab->word(t);
    m.vehicle = s.vocab->word(v);
    return m;
  };
  s.metaphors = {met("m1", 1, 2), met("m2", 3, 2), met("m3", 4, 5)};
  return s;
}

TEST(MeasureAll, RowsFollowMetaphorThenSliceOrder) {
  const auto s = small_study();
  const auto t = measure_all(s.metaphors, s.models, *s.vocab, {20, 1, false});
  ASSERT_EQ(t.measures.size(), 12u);
  for (std::size_t i = 0; i < t.measures.size(); ++i) {
    EXPECT_EQ(t.measures[i].metaphor_id, s.metaphors[i / 4].id);
    EXPECT_EQ(t.measures[i].slice, s.vocab->slices()[i % 4]);
  }
  // word x role x genre, no duplicate rows for the shared vehicle
  EXPECT_EQ(t.coherence.size(), 5u * 2u);
  EXPECT_TRUE(std::is_sorted(t.coherence.begin(), t.coherence.end(), [](const auto& a, const auto& b) {
    return std::tie(a.word, a.role, a.genre) < std::tie(b.word, b.role, b.genre);
  }));
  EXPECT_TRUE(t.cross_genre.empty());

  const auto& r = t.measures[0];
  const auto& m19 = s.models[2];
  EXPECT_DOUBLE_EQ(*r.cs, cosine(m19.context.row(1), m19.context.row(2)));
  EXPECT_NEAR(*r.snd_topic, *snd(s.vocab->word(1), m19, 20).value, 1e-12);
  EXPECT_DOUBLE_EQ(*r.freq_topic, *relative_log_frequency(s.vocab->word(1), kE19, *s.vocab));
  for (const auto& c : t.coherence) {
    const auto& a = c.genre == "lit" ? s.models[2] : s.models[3];
    const auto& b = c.genre == "lit" ? s.models[0] : s.models[1];
    EXPECT_DOUBLE_EQ(*c.vc, *vector_coherence(c.word, a, b));
  }
}

TEST(MeasureAll, ThreadedMatchesSerial) {
  const auto s = small_study();
  const auto a = measure_all(s.metaphors, s.models, *s.vocab, {20, 1, true});
  const auto b = measure_all(s.metaphors, s.models, *s.vocab, {20, 4, true});
  std::ostringstream sa, sb;
  write_measures(sa, a.measures);
  write_measures(sb, b.measures);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.cross_genre.size(), 5u * 2u);
}

TEST(MeasureAll, UntrainedWordsBecomeNa) {
  auto s = small_study();
  s.models[2].trained[1] = false;  // topic of m1 absent from e19_lit
  const auto t = measure_all(s.metaphors, s.models, *s.vocab, {10, 1, false});
  EXPECT_FALSE(t.measures[0].cs);
  EXPECT_FALSE(t.measures[0].snd_topic);
  EXPECT_TRUE(t.measures[0].snd_vehicle);
  for (const auto& c : t.coherence)
    if (c.word == s.vocab->word(1) && c.genre == "lit") EXPECT_FALSE(c.vc);
}

TEST(MeasureAll, SingleEpochGenreHasNoCoherence) {
  auto s = small_study();
  s.models.erase(s.models.begin() + 1);  // drop e21_news
  const auto t = measure_all(s.metaphors, s.models, *s.vocab, {10, 1, false});
  EXPECT_EQ(t.measures.size(), 9u);
  for (const auto& c : t.coherence) EXPECT_EQ(c.vc.has_value(), c.genre == "lit");
}

TEST(MeasureAll, ListsEveryMissingTerm) {
  auto s = small_study();
  s.metaphors[0].topic = "ghost";
  s.metaphors[2].vehicle = "phantom";
  try {
    measure_all(s.metaphors, s.models, *s.vocab);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("ghost"), std::string::npos);
    EXPECT_NE(msg.find("phantom"), std::string::npos);
    EXPECT_NE(msg.find("m3"), std::string::npos);
  }
}

TEST(MeasureAll, RejectsMixedCompasses) {
  auto s = small_study();
  s.models[3].compass_fingerprint = 7;
  EXPECT_THROW(measure_all(s.metaphors, s.models, *s.vocab), AlignmentError);
}

TEST(AverageRuns, FieldwiseMeanWithNaPropagation) {
  MeasureTables a, b;
  a.measures.push_back({"m1", kE19, 0.2, 0.4, std::nullopt, -3.0, -4.0, false});
  b.measures.push_back({"m1", kE19, 0.6, 0.0, 0.5, -3.0, -5.0, true});
  a.coherence.push_back({"x", Role::Topic, "lit", 0.9});
  b.coherence.push_back({"x", Role::Topic, "lit", 0.7});
  const auto m = average_runs({a, b});
  EXPECT_DOUBLE_EQ(*m.measures[0].cs, 0.4);
  EXPECT_DOUBLE_EQ(*m.measures[0].snd_topic, 0.2);
  EXPECT_FALSE(m.measures[0].snd_vehicle);
  EXPECT_DOUBLE_EQ(*m.measures[0].freq_vehicle, -4.5);
  EXPECT_TRUE(m.measures[0].truncated_neighborhood);
  EXPECT_DOUBLE_EQ(*m.coherence[0].vc, 0.8);
  b.coherence.clear();
  EXPECT_THROW(average_runs({a, b}), DataError);
  EXPECT_THROW(average_runs({}), ValidationError);
}

TEST(MeasureCsv, RoundTrip) {
  const auto s = small_study();
  const auto t = measure_all(s.metaphors, s.models, *s.vocab, {10, 1, false});
  std::stringstream ms, cs;
  write_measures(ms, t.measures);
  write_coherence(cs, t.coherence);
  EXPECT_EQ(ms.str().substr(0, ms.str().find('\n')), "metaphor_id,epoch,genre,cs,snd_topic,snd_vehicle,freq_topic,freq_vehicle");
  const auto m2 = read_measures(ms);
  const auto c2 = read_coherence(cs);
  ASSERT_EQ(m2.size(), t.measures.size());
  for (std::size_t i = 0; i < m2.size(); ++i) {
    EXPECT_EQ(m2[i].metaphor_id, t.measures[i].metaphor_id);
    EXPECT_EQ(m2[i].slice, t.measures[i].slice);
    EXPECT_NEAR(*m2[i].cs, *t.measures[i].cs, 1e-5);
    EXPECT_NEAR(*m2[i].freq_vehicle, *t.measures[i].freq_vehicle, 1e-5);
  }
  ASSERT_EQ(c2.size(), t.coherence.size());
  EXPECT_EQ(c2[3].word, t.coherence[3].word);
  EXPECT_EQ(c2[3].role, t.coherence[3].role);
}

TEST(MeasureCsv, RejectsBadCells) {
  std::istringstream in("metaphor_id,epoch,genre,cs,snd_topic,snd_vehicle,freq_topic,freq_vehicle\nm1,e19,lit,x,NA,NA,NA,NA\n");
  EXPECT_THROW(read_measures(in), ValidationError);
  std::istringstream wrong("a,b\n1,2\n");
  EXPECT_THROW(read_measures(wrong), ValidationError);
}

}  // namespace
}  // namespace twec
