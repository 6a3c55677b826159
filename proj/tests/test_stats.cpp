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

#include "twec/stats.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>
#include <sstream>

namespace twec {
namespace {

using Opt = std::optional<double>;

double boost_two_sided(double r, std::size_t n) {
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TEST(Describe, MeanSdAndMissing) {
  const std::vector<Opt> v{2.0, std::nullopt, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  const auto s = describe(std::span<const Opt>(v));
  EXPECT_EQ(s.n_present, 8u);
  EXPECT_EQ(s.n_missing, 1u);
  EXPECT_DOUBLE_EQ(*s.mean, 5.0);
  EXPECT_NEAR(*s.sd, std::sqrt(32.0 / 7.0), 1e-14);
  const std::vector<double> one{3.0};
  const auto t = describe(std::span<const double>(one));
  EXPECT_DOUBLE_EQ(*t.mean, 3.0);
  EXPECT_FALSE(t.sd);
  const std::vector<Opt> none{std::nullopt};
  EXPECT_FALSE(describe(std::span<const Opt>(none)).mean);
}

TEST(Pearson, TextbookExample) {
  // Sxy = 6, Sxx = 10, Syy = 6
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 4, 5};
  const auto r = pearson(x, y);
  EXPECT_NEAR(r.r, std::sqrt(0.6), 1e-14);
  EXPECT_EQ(r.n, 5u);
  EXPECT_NEAR(r.p, boost_two_sided(r.r, 5), 1e-12);
}

TEST(Pearson, PValueMatchesBoostAcrossSizes) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (std::size_t size : {3u, 4u, 10u, 50u, 515u}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(size), y(size);
      for (std::size_t i = 0; i < size; ++i) {
        x[i] = n(rng);
        y[i] = 0.3 * x[i] + n(rng);
      }
      const auto r = pearson(x, y);
      const double expected = boost_two_sided(r.r, size);
      EXPECT_NEAR(r.p, expected, 1e-10 + 1e-8 * expected) << "n=" << size;
    }
  }
}

TEST(Pearson, AffineInvariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(40), y(40), x2(40), y2(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x[i] = n(rng);
    y[i] = x[i] + n(rng);
    x2[i] = 3.5 * x[i] - 100.0;
    y2[i] = -0.25 * y[i] + 7.0;
  }
  const auto a = pearson(x, y), b = pearson(x2, y2);
  EXPECT_NEAR(b.r, -a.r, 1e-12);
  EXPECT_NEAR(b.p, a.p, 1e-10);
}

TEST(Pearson, PairwiseDeletionAndEdgeCases) {
  const std::vector<Opt> x{1.0, 2.0, std::nullopt, 4.0, 5.0, 6.0};
  const std::vector<Opt> y{2.0, std::nullopt, 9.0, 4.0, 5.0, 8.0};
  const auto r = pearson(std::span<const Opt>(x), std::span<const Opt>(y));
  const std::vector<double> xc{1, 4, 5, 6}, yc{2, 4, 5, 8};
  EXPECT_EQ(r.n, 4u);
  EXPECT_DOUBLE_EQ(r.r, pearson(xc, yc).r);

  const std::vector<double> two{1, 2};
  EXPECT_THROW(pearson(two, two), InsufficientData);
  const std::vector<double> flat{1, 1, 1}, up{1, 2, 3};
  EXPECT_THROW(pearson(flat, up), UndefinedStatistic);
  const auto perfect = pearson(up, up);
  EXPECT_DOUBLE_EQ(perfect.r, 1.0);
  EXPECT_DOUBLE_EQ(perfect.p, 0.0);
}

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 40.0})
    for (double b : {0.5, 3.0, 12.0})
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0})
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12) << a << " " << b << " " << x;
  EXPECT_THROW(incomplete_beta(0.0, 1.0, 0.5), ValidationError);
  EXPECT_THROW(incomplete_beta(1.0, 1.0, 1.5), ValidationError);
}

TEST(StudentT, CdfMatchesBoost) {
  for (double df : {1.0, 2.0, 7.0, 100.0, 513.0}) {
    boost::math::students_t dist(df);
    for (double t : {-30.0, -2.0, -0.1, 0.0, 0.5, 1.96, 8.0})
      EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(dist, t), 1e-12);
  }
}

TEST(Holm, HandWorkedExample) {
  const std::vector<double> p{0.01, 0.04, 0.03, 0.005};
  const auto adj = holm_adjust(p);
  // sorted: 0.005*4=0.02, 0.01*3=0.03, 0.03*2=0.06, 0.04*1=0.04 -> running max 0.06
  const std::vector<double> expected{0.03, 0.06, 0.06, 0.02};
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(adj[i], expected[i], 1e-15);
}

TEST(Holm, MonotoneClippedAndNoLargerThanBonferroni) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 0.3);
  std::vector<double> p(30);
  for (auto& v : p) v = u(rng);
  p[4] = p[9];  // a tie
  const auto h = holm_adjust(p), b = bonferroni_adjust(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_GE(h[i], p[i]);
    EXPECT_LE(h[i], 1.0);
    EXPECT_LE(h[i], b[i]);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[i] < p[j]) EXPECT_LE(h[i], h[j]);
  }
  EXPECT_EQ(h[4], h[9]);
  EXPECT_TRUE(holm_adjust(std::vector<double>{}).empty());
  EXPECT_THROW(holm_adjust(std::vector<double>{1.5}), ValidationError);
}

TEST(Bonferroni, ScalesAndClips) {
  const auto b = bonferroni_adjust(std::vector<double>{0.01, 0.3, 0.5});
  EXPECT_DOUBLE_EQ(b[0], 0.03);
  EXPECT_DOUBLE_EQ(b[1], 0.9);
  EXPECT_DOUBLE_EQ(b[2], 1.0);
  EXPECT_EQ(parse_correction("bonferroni"), Correction::Bonferroni);
  EXPECT_THROW(parse_correction("fdr"), ValidationError);
}

Metaphor met(const std::string& id, const std::string& t, const std::string& v) {
  Metaphor m;
  m.id = id;
  m.topic = t;
  m.vehicle = v;
  return m;
}

TEST(AnalysisTable, JoinsCoherenceByGenre) {
  const std::vector<Metaphor> ms{met("m1", "a", "b"), met("m2", "c", "b")};
  const SliceId e19{"e19", "lit"}, e21{"e21", "lit"};
  std::vector<MeasureRecord> measures{
      {"m1", e19, 0.1, 0.2, 0.3, -1.0, -2.0, false},
      {"m1", e21, 0.4, std::nullopt, 0.3, std::nullopt, -2.0, false},
      {"m2", e19, 0.5, 0.6, 0.7, -3.0, -4.0, false},
      {"m2", e21, 0.8, 0.9, 0.7, -3.0, -4.0, false},
  };
  std::vector<CoherenceRecord> coh{{"a", Role::Topic, "lit", 0.95},
                                   {"b", Role::Vehicle, "lit", 0.5},
                                   {"c", Role::Topic, "lit", std::nullopt}};
  const auto rows = build_analysis_table(measures, coh, ms);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_DOUBLE_EQ(*rows[1].vc_topic, 0.95);
  EXPECT_DOUBLE_EQ(*rows[3].vc_vehicle, 0.5);
  EXPECT_FALSE(rows[2].vc_topic);

  std::stringstream ss;
  write_analysis_table(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')),
            "metaphor_id,epoch,genre,cs,snd_topic,snd_vehicle,vc_topic,vc_vehicle,freq_topic,freq_vehicle");
  const auto back = read_analysis_table(ss);
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[1].slice, e21);
  EXPECT_FALSE(back[1].snd_topic);
  EXPECT_DOUBLE_EQ(*back[3].cs, 0.8);

  coh.pop_back();
  EXPECT_THROW(build_analysis_table(measures, coh, ms), DataError);
  measures[0].metaphor_id = "zz";
  EXPECT_THROW(build_analysis_table(measures, {}, ms), DataError);
}

std::vector<AnalysisRow> synthetic_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<AnalysisRow> rows;
  for (const auto& slice : {SliceId{"e19", "lit"}, SliceId{"e21", "lit"}})
    for (std::size_t i = 0; i < n; ++i) {
      AnalysisRow r;
      r.metaphor_id = "m" + std::to_string(i);
      r.slice = slice;
      r.cs = g(rng);
      r.snd_topic = *r.cs * 0.8 + 0.2 * g(rng);
      r.snd_vehicle = g(rng);
      r.vc_topic = 0.5 + 0.01 * static_cast<double>(i);
      r.vc_vehicle = std::nullopt;
      r.freq_topic = i % 5 ? Opt(g(rng)) : std::nullopt;
      r.freq_vehicle = g(rng);
      rows.push_back(r);
    }
  return rows;
}

TEST(Descriptives, SlicesAndGenres) {
  const auto rows = synthetic_rows(20, 1);
  const auto d = descriptives(rows);
  // 5 slice-level variables x 2 slices + 2 VC variables x 1 genre
  EXPECT_EQ(d.size(), 12u);
  for (const auto& r : d) {
    if (r.measure.rfind("vc_", 0) == 0) {
      EXPECT_EQ(r.epoch, "all");
      EXPECT_EQ(r.summary.n_present + r.summary.n_missing, 20u);
    }
    if (r.measure == "freq_topic") EXPECT_EQ(r.summary.n_missing, 4u);
  }
  std::vector<double> cs19;
  for (const auto& r : rows)
    if (r.slice.epoch == "e19") cs19.push_back(*r.cs);
  EXPECT_DOUBLE_EQ(*d[0].summary.mean, *describe(std::span<const double>(cs19)).mean);
}

TEST(Correlations, FullMatrixWithSingleFamily) {
  const auto rows = synthetic_rows(60, 2);
  const std::vector<std::string> vars{"cs", "snd_topic", "snd_vehicle", "freq_topic", "vc_vehicle"};
  const auto cells = correlation_matrix(rows, vars, Correction::Holm, 0.05);
  const std::size_t k = vars.size();
  ASSERT_EQ(cells.size(), 2 * k * k);
  std::vector<double> raw;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b) {
        const auto& c = cells[s * k * k + a * k + b];
        if (c.p_raw) raw.push_back(*c.p_raw);
      }
  // vc_vehicle is all NA, so its 4 cells per slice are undefined
  EXPECT_EQ(raw.size(), 2u * (10u - 4u));
  const auto adj = holm_adjust(raw);
  std::size_t j = 0;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t a = 0; a < k; ++a) {
      const auto& diag = cells[s * k * k + a * k + a];
      EXPECT_DOUBLE_EQ(*diag.r, 1.0);
      EXPECT_FALSE(diag.p_raw);
      EXPECT_FALSE(diag.significant);
      for (std::size_t b = a + 1; b < k; ++b) {
        const auto& up = cells[s * k * k + a * k + b];
        const auto& low = cells[s * k * k + b * k + a];
        EXPECT_EQ(up.r, low.r);
        EXPECT_EQ(up.p_adjusted, low.p_adjusted);
        EXPECT_EQ(up.n_pairs, low.n_pairs);
        if (!up.p_raw) {
          EXPECT_FALSE(up.significant);
          continue;
        }
        EXPECT_DOUBLE_EQ(*up.p_adjusted, adj[j++]);
        EXPECT_EQ(*up.significant, *up.p_adjusted < 0.05);
      }
    }
  const auto& cs_snd = cells[0 * k + 1];
  EXPECT_GT(*cs_snd.r, 0.9);
  EXPECT_TRUE(*cs_snd.significant);
  EXPECT_EQ(cells[0 * k + 3].n_pairs, 48u);
  EXPECT_THROW(correlation_matrix(rows, {"cs"}), ValidationError);
  EXPECT_THROW(correlation_matrix(rows, {"cs", "bogus"}), ValidationError);
}

TEST(Histogram, DensityIntegratesToOne) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 1);
  std::vector<Opt> v;
  for (int i = 0; i < 500; ++i) v.push_back(g(rng));
  v.push_back(std::nullopt);
  const auto bins = histogram(v, 12);
  ASSERT_EQ(bins.size(), 12u);
  double area = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    area += bins[i].density * (bins[i].right - bins[i].left);
    total += bins[i].count;
    if (i) EXPECT_DOUBLE_EQ(bins[i].left, bins[i - 1].right);
  }
  EXPECT_NEAR(area, 1.0, 1e-12);
  EXPECT_EQ(total, 500u);
}

TEST(Histogram, IdenticalValuesAndErrors) {
  const std::vector<Opt> same{2.0, 2.0, 2.0};
  const auto b = histogram(same, 10);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].count, 3u);
  EXPECT_LT(b[0].left, 2.0);
  EXPECT_GT(b[0].right, 2.0);
  EXPECT_NEAR(b[0].density * (b[0].right - b[0].left), 1.0, 1e-12);
  EXPECT_THROW(histogram(same, 0), ValidationError);
  const std::vector<Opt> none{std::nullopt};
  EXPECT_THROW(histogram(none, 3), UndefinedStatistic);
}

TEST(Histogram, TableSkipsAllNaColumns) {
  const auto rows = synthetic_rows(30, 4);
  const auto h = histograms(rows, 5);
  for (const auto& r : h) EXPECT_NE(r.variable, "vc_vehicle");
  std::ostringstream out;
  write_histograms(out, h);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "variable,epoch,genre,bin_left,bin_right,count,density");
}

TEST(Writers, FlagsAndNa) {
  const auto rows = synthetic_rows(10, 6);
  std::ostringstream out;
  write_correlations(out, correlation_matrix(rows, {"cs", "snd_topic", "vc_vehicle"}));
  const std::string s = out.str();
  EXPECT_NE(s.find(",true\n"), std::string::npos);
  EXPECT_NE(s.find(",NA,NA,NA,0,NA\n"), std::string::npos);
}

}  // namespace
}  // namespace twec
