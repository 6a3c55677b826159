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

#ifndef TWEC_TRAINING_HPP
#define TWEC_TRAINING_HPP

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "twec/corpus.hpp"
#include "twec/matrix.hpp"

namespace twec {

using WordIndex = Vocabulary::Index;
using Rng = std::mt19937_64;

struct Hyperparams {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  double min_lr = 1e-4;
  double subsample_t = 1e-3;  // <= 0 disables subsampling
  std::uint64_t seed = 1;
  bool deterministic = false;
  std::size_t threads = 1;  // ignored in deterministic mode

  /// Throws ValidationError on out-of-range values.
  void validate() const;
};

/// Unigram^power noise distribution, sampled in O(1) with Vose's alias method.
class NoiseSampler {
 public:
  NoiseSampler() = default;
  /// Rejects distributions with fewer than two words of positive weight, since
  /// the collision rule could never produce a negative for the only word.
  explicit NoiseSampler(std::span<const std::uint64_t> counts, double power = 0.75);

  std::size_t size() const noexcept { return prob_.size(); }
  double probability(std::size_t i) const { return weights_.at(i); }

  WordIndex sample(Rng& rng) const;
  /// Resamples until the draw differs from `positive`.
  WordIndex sample_excluding(Rng& rng, WordIndex positive) const;

 private:
  std::vector<double> prob_;
  std::vector<WordIndex> alias_;
  std::vector<double> weights_;
};

/// Frequent-word keep probability min(1, sqrt(t/f) + t/f).
double subsample_keep_prob(double word_freq, double t);

enum class TargetMode { Frozen, Trainable };

struct RowGradient {
  WordIndex row;
  std::vector<double> grad;
};

struct CbowLossGrad {
  bool skipped = false;  // empty context
  double loss = 0.0;
  std::vector<RowGradient> context;  // d loss / d C[row], aggregated per distinct row
  std::vector<RowGradient> target;   // d loss / d U[row]; empty in frozen mode
};

/// Negative-sampling CBOW loss for one example,
///   -log s(u_t . h) - sum_n log s(-u_n . h),  h = mean of the context rows of C,
/// with its exact gradient.
CbowLossGrad cbow_loss_and_grad(std::span<const WordIndex> context, WordIndex target,
                                std::span<const WordIndex> negatives, const Matrix& C,
                                const Matrix& U, TargetMode mode = TargetMode::Trainable);

/// Atemporal model trained on every slice at once. U is the compass.
struct CompassModel {
  std::shared_ptr<const Vocabulary> vocab;
  Matrix target;   // U
  Matrix context;  // C0
  Hyperparams hyperparams;
  std::vector<double> epoch_loss;

  /// Binds slice models to this compass: hash of U and the vocabulary words.
  std::uint64_t fingerprint() const;
};

struct SliceEmbeddings {
  SliceId slice;
  std::shared_ptr<const Vocabulary> vocab;
  Matrix context;  // C_i; row w is the temporal vector of word w
  std::uint64_t compass_fingerprint = 0;
  std::vector<bool> trained;  // nonzero count in this slice
  std::uint64_t token_count = 0;
  Hyperparams hyperparams;
  std::vector<double> epoch_loss;

  bool is_trained(WordIndex w) const { return w < trained.size() && trained[w]; }
  std::size_t trained_count() const;
};

CompassModel train_compass(std::span<const CorpusSlice> slices,
                           std::shared_ptr<const Vocabulary> vocab, const Hyperparams& hp);

/// Initialises C_i from the compass context matrix and trains it on the slice
/// alone against the frozen compass U.
SliceEmbeddings train_slice(const CorpusSlice& slice, const CompassModel& compass,
                            const Hyperparams& hp);

/// Full CBOW on one slice from a fresh random initialisation, no compass.
/// Used as the unaligned baseline; its fingerprint is unique to the run.
SliceEmbeddings train_independent(const CorpusSlice& slice, std::shared_ptr<const Vocabulary> vocab,
                                  const Hyperparams& hp);

/// Seed used for a slice's training stream.
std::uint64_t slice_seed(std::uint64_t seed, const SliceId& id);

namespace detail {

using IdDocument = std::vector<WordIndex>;

/// Maps tokens to vocabulary ids, dropping out-of-vocabulary tokens.
std::vector<IdDocument> to_ids(const CorpusSlice& slice, const Vocabulary& vocab);

/// Uniform(-0.5/dim, 0.5/dim) rows.
void init_context(Matrix& C, Rng& rng);

/// CBOW negative-sampling SGD over `groups` (one group per slice; group order
/// reshuffled every epoch), updating both C and U. Returns the mean loss per epoch.
std::vector<double> train_joint(Matrix& C, Matrix& U, const std::vector<std::vector<IdDocument>>& groups,
                                std::span<const std::uint64_t> counts, const Hyperparams& hp,
                                std::uint64_t seed);

/// Same update path with U read-only: only context rows move.
std::vector<double> train_context(Matrix& C, const Matrix& U,
                                  const std::vector<std::vector<IdDocument>>& groups,
                                  std::span<const std::uint64_t> counts, const Hyperparams& hp,
                                  std::uint64_t seed);

}  // namespace detail

}  // namespace twec

#endif  // TWEC_TRAINING_HPP
