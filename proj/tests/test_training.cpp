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

#include "twec/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "twec/error.hpp"
#include "twec/synthcorpus.hpp"

namespace twec {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Loss written out directly from the definition, for the oracle checks.
double reference_loss(std::span<const WordIndex> ctx, WordIndex target, std::span<const WordIndex> neg,
                      const Matrix& C, const Matrix& U) {
  std::vector<double> h(C.cols(), 0.0);
  for (auto c : ctx)
    for (std::size_t d = 0; d < C.cols(); ++d) h[d] += C(c, d) / static_cast<double>(ctx.size());
  auto dot = [&](WordIndex w) {
    double s = 0;
    for (std::size_t d = 0; d < U.cols(); ++d) s += U(w, d) * h[d];
    return s;
  };
  double loss = -std::log(sigmoid(dot(target)));
  for (auto n : neg) loss -= std::log(sigmoid(-dot(n)));
  return loss;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (auto& v : m.row(r)) v = static_cast<float>(u(rng));
  return m;
}

struct SmallCorpus {
  std::vector<CorpusSlice> slices;
  std::shared_ptr<const Vocabulary> vocab;
};

SmallCorpus small_corpus(std::uint64_t seed = 5) {
  PlantSpec spec;
  spec.vocab_size = 200;
  spec.tokens_per_slice = 6000;
  spec.seed = seed;
  spec.occurrences = 20;
  spec.plants.push_back({"only_early",
                         {{SliceId::parse("e19_lit"), {ContextSource::Kind::Cluster, 0}},
                          {SliceId::parse("e21_lit"), {ContextSource::Kind::Absent, 0}}},
                         {}});
  SmallCorpus out;
  out.slices = generate(spec).slices;
  out.vocab = std::make_shared<const Vocabulary>(build_vocab(out.slices, 1));
  return out;
}

Hyperparams small_hp() {
  Hyperparams hp;
  hp.dim = 16;
  hp.epochs = 2;
  hp.deterministic = true;
  hp.seed = 11;
  return hp;
}

TEST(Hyperparams, Validation) {
  Hyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  auto bad = [](auto mutate) {
    Hyperparams h;
    mutate(h);
    EXPECT_THROW(h.validate(), ValidationError);
  };
  bad([](Hyperparams& h) { h.dim = 1; });
  bad([](Hyperparams& h) { h.window = 0; });
  bad([](Hyperparams& h) { h.negatives = 0; });
  bad([](Hyperparams& h) { h.epochs = 0; });
  bad([](Hyperparams& h) { h.initial_lr = 0; });
  bad([](Hyperparams& h) { h.min_lr = 1.0; });
  bad([](Hyperparams& h) { h.threads = 0; });
}

TEST(NoiseSampler, ProbabilitiesFollowPowerLaw) {
  const std::vector<std::uint64_t> counts{100, 10, 0, 1};
  const NoiseSampler ns(counts);
  const double z = std::pow(100.0, 0.75) + std::pow(10.0, 0.75) + 1.0;
  EXPECT_NEAR(ns.probability(0), std::pow(100.0, 0.75) / z, 1e-12);
  EXPECT_NEAR(ns.probability(1), std::pow(10.0, 0.75) / z, 1e-12);
  EXPECT_EQ(ns.probability(2), 0.0);
  EXPECT_NEAR(ns.probability(3), 1.0 / z, 1e-12);
}

TEST(NoiseSampler, EmpiricalFrequenciesMatch) {
  const std::vector<std::uint64_t> counts{50, 20, 0, 5, 1};
  const NoiseSampler ns(counts);
  Rng rng(3);
  std::vector<std::size_t> hits(counts.size(), 0);
  const std::size_t n = 400000;
  for (std::size_t i = 0; i < n; ++i) ++hits[ns.sample(rng)];
  EXPECT_EQ(hits[2], 0u);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = ns.probability(i);
    const double sd = std::sqrt(n * p * (1 - p));
    EXPECT_NEAR(static_cast<double>(hits[i]), n * p, 5 * sd + 1) << "word " << i;
  }
}

TEST(NoiseSampler, ExcludingNeverReturnsPositive) {
  const std::vector<std::uint64_t> counts{1000, 1};
  const NoiseSampler ns(counts);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(ns.sample_excluding(rng, 0), 1u);
}

TEST(NoiseSampler, NeedsTwoPositiveWords) {
  const std::vector<std::uint64_t> one{0, 7, 0};
  EXPECT_THROW(NoiseSampler{one}, ValidationError);
}

TEST(Subsampling, KeepProbability) {
  const double t = 1e-3;
  for (double f : {1e-5, 1e-3, 0.01, 0.2}) {
    const double expected = std::min(1.0, std::sqrt(t / f) + t / f);
    EXPECT_DOUBLE_EQ(subsample_keep_prob(f, t), expected);
  }
  EXPECT_EQ(subsample_keep_prob(0.5, 0.0), 1.0);
}

TEST(CbowLoss, MatchesDefinition) {
  Rng rng(9);
  const Matrix C = random_matrix(6, 4, rng), U = random_matrix(6, 4, rng);
  const std::vector<WordIndex> ctx{0, 2, 2}, neg{4, 5};
  const auto r = cbow_loss_and_grad(ctx, 1, neg, C, U);
  EXPECT_NEAR(r.loss, reference_loss(ctx, 1, neg, C, U), 1e-12);
}

TEST(CbowLoss, GradientMatchesFiniteDifferences) {
  Rng rng(21);
  const double eps = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix C = random_matrix(7, 5, rng), U = random_matrix(7, 5, rng);
    const std::vector<WordIndex> ctx{0, 3, 3, 6}, neg{2, 5, 5};
    const WordIndex target = 1;
    const auto r = cbow_loss_and_grad(ctx, target, neg, C, U);
    auto check = [&](Matrix& M, const std::vector<RowGradient>& grads) {
      for (const auto& g : grads)
        for (std::size_t d = 0; d < M.cols(); ++d) {
          const float keep = M(g.row, d);
          M(g.row, d) = static_cast<float>(keep + eps);
          const double up = reference_loss(ctx, target, neg, C, U);
          M(g.row, d) = static_cast<float>(keep - eps);
          const double down = reference_loss(ctx, target, neg, C, U);
          M(g.row, d) = keep;
          // the float perturbation is not exactly eps; use the realised step
          const double step = static_cast<double>(static_cast<float>(keep + eps)) -
                              static_cast<double>(static_cast<float>(keep - eps));
          EXPECT_NEAR(g.grad[d], (up - down) / step, 2e-3);
        }
    };
    check(C, r.context);
    check(U, r.target);
  }
}

TEST(CbowLoss, FrozenModeHasNoTargetGradient) {
  Rng rng(2);
  const Matrix C = random_matrix(4, 3, rng), U = random_matrix(4, 3, rng);
  const std::vector<WordIndex> ctx{0}, neg{3};
  const auto r = cbow_loss_and_grad(ctx, 2, neg, C, U, TargetMode::Frozen);
  EXPECT_TRUE(r.target.empty());
  ASSERT_EQ(r.context.size(), 1u);
}

TEST(CbowLoss, EmptyContextIsSkipped) {
  const Matrix C(3, 2, 0.1f), U(3, 2, 0.1f);
  const auto r = cbow_loss_and_grad({}, 0, std::vector<WordIndex>{1}, C, U);
  EXPECT_TRUE(r.skipped);
  EXPECT_TRUE(r.context.empty());
}

TEST(CbowLoss, RepeatedContextRowsAreAggregated) {
  Rng rng(4);
  const Matrix C = random_matrix(5, 3, rng), U = random_matrix(5, 3, rng);
  const std::vector<WordIndex> ctx{1, 1, 1}, neg{4};
  const auto r = cbow_loss_and_grad(ctx, 0, neg, C, U);
  ASSERT_EQ(r.context.size(), 1u);
  EXPECT_EQ(r.context[0].row, 1u);
}

TEST(TrainCompass, DeterministicModeIsReproducible) {
  const auto c = small_corpus();
  const auto hp = small_hp();
  const auto a = train_compass(c.slices, c.vocab, hp);
  const auto b = train_compass(c.slices, c.vocab, hp);
  EXPECT_EQ(a.target, b.target);
  EXPECT_EQ(a.context, b.context);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  auto other = hp;
  other.seed = 12;
  EXPECT_NE(train_compass(c.slices, c.vocab, other).fingerprint(), a.fingerprint());
}

TEST(TrainCompass, LossDecreasesAndParametersFinite) {
  const auto c = small_corpus();
  auto hp = small_hp();
  hp.epochs = 4;
  const auto m = train_compass(c.slices, c.vocab, hp);
  ASSERT_EQ(m.epoch_loss.size(), 4u);
  EXPECT_LT(m.epoch_loss.back(), m.epoch_loss.front());
  EXPECT_TRUE(m.target.all_finite());
  EXPECT_TRUE(m.context.all_finite());
}

TEST(TrainCompass, RejectsMismatchedVocabulary) {
  const auto c = small_corpus();
  const std::vector<CorpusSlice> one{c.slices[0]};
  EXPECT_THROW(train_compass(one, c.vocab, small_hp()), DataError);
}

TEST(TrainCompass, HugeLearningRateDiverges) {
  const auto c = small_corpus();
  auto hp = small_hp();
  hp.initial_lr = 1e30;
  hp.min_lr = 1e-4;
  EXPECT_THROW(train_compass(c.slices, c.vocab, hp), DivergenceError);
}

TEST(TrainCompass, HogwildModeRunsWithThreads) {
  const auto c = small_corpus();
  auto hp = small_hp();
  hp.deterministic = false;
  hp.threads = 3;
  const auto m = train_compass(c.slices, c.vocab, hp);
  EXPECT_TRUE(m.target.all_finite());
  EXPECT_EQ(m.epoch_loss.size(), hp.epochs);
}

TEST(TrainSlice, LeavesCompassUntouched) {
  const auto c = small_corpus();
  const auto hp = small_hp();
  const auto compass = train_compass(c.slices, c.vocab, hp);
  const auto u_before = compass.target.checksum();
  const auto fp = compass.fingerprint();
  const auto s = train_slice(c.slices[0], compass, hp);
  EXPECT_EQ(compass.target.checksum(), u_before);
  EXPECT_EQ(s.compass_fingerprint, fp);
  EXPECT_NE(s.context, compass.context);
}

TEST(TrainSlice, AbsentWordsKeepCompassRows) {
  const auto c = small_corpus();
  const auto hp = small_hp();
  const auto compass = train_compass(c.slices, c.vocab, hp);
  const auto late = train_slice(c.slices[1], compass, hp);
  const auto w = c.vocab->index("only_early");
  EXPECT_FALSE(late.is_trained(w));
  for (std::size_t d = 0; d < hp.dim; ++d) EXPECT_EQ(late.context(w, d), compass.context(w, d));
  const auto early = train_slice(c.slices[0], compass, hp);
  EXPECT_TRUE(early.is_trained(w));
  EXPECT_EQ(early.trained_count(),
            static_cast<std::size_t>(std::count(early.trained.begin(), early.trained.end(), true)));
}

TEST(TrainSlice, DimensionMustMatchCompass) {
  const auto c = small_corpus();
  const auto compass = train_compass(c.slices, c.vocab, small_hp());
  auto hp = small_hp();
  hp.dim = 8;
  EXPECT_THROW(train_slice(c.slices[0], compass, hp), ValidationError);
}

TEST(TrainIndependent, HasItsOwnFingerprint) {
  const auto c = small_corpus();
  const auto hp = small_hp();
  const auto a = train_independent(c.slices[0], c.vocab, hp);
  const auto b = train_independent(c.slices[1], c.vocab, hp);
  EXPECT_NE(a.compass_fingerprint, b.compass_fingerprint);
}

TEST(ToIds, DropsOutOfVocabularyTokens) {
  const auto slice = make_slice(SliceId::parse("e19_lit"), {{"a", "zz", "b"}, {"zz"}});
  const std::vector<CorpusSlice> slices{make_slice(SliceId::parse("e19_lit"), {{"a", "b"}})};
  const auto v = build_vocab(slices, 1);
  const auto ids = detail::to_ids(slice, v);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0].size(), 2u);
}

}  // namespace
}  // namespace twec
