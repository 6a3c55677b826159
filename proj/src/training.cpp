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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "twec/error.hpp"

namespace twec {

void Hyperparams::validate() const {
  if (dim < 2) throw ValidationError("dim must be >= 2");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (negatives < 1) throw ValidationError("negatives must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ValidationError("initial_lr must be > 0");
  if (!(min_lr > 0.0) || min_lr > initial_lr) throw ValidationError("min_lr must be in (0, initial_lr]");
  if (!std::isfinite(subsample_t)) throw ValidationError("subsample threshold must be finite");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

// ---------------------------------------------------------------------------
// Noise distribution

NoiseSampler::NoiseSampler(std::span<const std::uint64_t> counts, double power) {
  const std::size_t n = counts.size();
  weights_.resize(n);
  std::size_t positive = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = counts[i] > 0 ? std::pow(static_cast<double>(counts[i]), power) : 0.0;
    total += weights_[i];
    positive += counts[i] > 0;
  }
  if (positive < 2)
    throw ValidationError("noise distribution needs at least two words with nonzero count");
  for (double& w : weights_) w /= total;

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = static_cast<WordIndex>(l);
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (std::size_t i : large) prob_[i] = 1.0;
  // leftovers from rounding; zero-weight entries must never be kept
  for (std::size_t i : small) prob_[i] = weights_[i] > 0.0 ? 1.0 : 0.0;
}

WordIndex NoiseSampler::sample(Rng& rng) const {
  const std::size_t n = prob_.size();
  const std::uint64_t r = rng();
  const std::size_t column = static_cast<std::size_t>((r >> 11) % n);
  const double coin = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return coin < prob_[column] ? static_cast<WordIndex>(column) : alias_[column];
}

WordIndex NoiseSampler::sample_excluding(Rng& rng, WordIndex positive) const {
  for (;;) {
    const WordIndex w = sample(rng);
    if (w != positive) return w;
  }
}

double subsample_keep_prob(double word_freq, double t) {
  if (t <= 0.0) return 1.0;
  const double ratio = t / word_freq;
  return std::min(1.0, std::sqrt(ratio) + ratio);
}

// ---------------------------------------------------------------------------
// Single-example loss and gradient

namespace {

// -log s(x), computed without overflow.
double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void accumulate(std::map<WordIndex, std::vector<double>>& acc, WordIndex row,
                std::span<const double> v, double scale) {
  auto& g = acc[row];
  if (g.empty()) g.assign(v.size(), 0.0);
  for (std::size_t d = 0; d < v.size(); ++d) g[d] += scale * v[d];
}

std::vector<RowGradient> flatten(std::map<WordIndex, std::vector<double>>& acc) {
  std::vector<RowGradient> out;
  out.reserve(acc.size());
  for (auto& [row, g] : acc) out.push_back({row, std::move(g)});
  return out;
}

}  // namespace

CbowLossGrad cbow_loss_and_grad(std::span<const WordIndex> context, WordIndex target,
                                std::span<const WordIndex> negatives, const Matrix& C,
                                const Matrix& U, TargetMode mode) {
  CbowLossGrad out;
  if (context.empty()) {
    out.skipped = true;
    return out;
  }
  const std::size_t dim = C.cols();
  if (U.cols() != dim) throw ValidationError("context and target matrices differ in width");
  auto check = [](WordIndex w, const Matrix& m) {
    if (w >= m.rows()) throw ValidationError("word index out of range");
  };
  for (WordIndex w : context) check(w, C);
  check(target, U);
  for (WordIndex w : negatives) check(w, U);

  std::vector<double> h(dim, 0.0);
  for (WordIndex w : context) {
    const auto row = C.row(w);
    for (std::size_t d = 0; d < dim; ++d) h[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(context.size());
  for (double& v : h) v *= inv;

  std::vector<double> grad_h(dim, 0.0);
  std::map<WordIndex, std::vector<double>> u_grads;
  auto term = [&](WordIndex w, double label) {
    const auto u = U.row(w);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += u[d] * h[d];
    // label 1: -log s(dot); label 0: -log s(-dot)
    out.loss += label > 0.5 ? neg_log_sigmoid(dot) : neg_log_sigmoid(-dot);
    const double coeff = sigmoid(dot) - label;  // d loss / d dot
    for (std::size_t d = 0; d < dim; ++d) grad_h[d] += coeff * u[d];
    if (mode == TargetMode::Trainable) accumulate(u_grads, w, h, coeff);
  };
  term(target, 1.0);
  for (WordIndex w : negatives) term(w, 0.0);

  std::map<WordIndex, std::vector<double>> c_grads;
  for (WordIndex w : context) accumulate(c_grads, w, grad_h, inv);
  out.context = flatten(c_grads);
  out.target = flatten(u_grads);
  return out;
}

// ---------------------------------------------------------------------------
// SGD engine

namespace detail {

std::vector<IdDocument> to_ids(const CorpusSlice& slice, const Vocabulary& vocab) {
  std::vector<IdDocument> docs;
  docs.reserve(slice.documents.size());
  for (const auto& doc : slice.documents) {
    IdDocument ids;
    ids.reserve(doc.size());
    for (const auto& tok : doc)
      if (auto w = vocab.find(tok)) ids.push_back(*w);
    if (!ids.empty()) docs.push_back(std::move(ids));
  }
  return docs;
}

void init_context(Matrix& C, Rng& rng) {
  const float half = 0.5f / static_cast<float>(C.cols());
  std::uniform_real_distribution<float> dist(-half, half);
  float* p = C.data();
  for (std::size_t i = 0, n = C.rows() * C.cols(); i < n; ++i) p[i] = dist(rng);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct WorkerTotals {
  double loss = 0.0;
  std::uint64_t examples = 0;
};

class SgdRun {
 public:
  SgdRun(Matrix& C, const float* u_read, float* u_write, const std::vector<std::vector<IdDocument>>& groups,
         std::span<const std::uint64_t> counts, const Hyperparams& hp, std::uint64_t seed)
      : C_(C), u_read_(u_read), u_write_(u_write), groups_(groups), hp_(hp), seed_(seed),
        noise_(counts), dim_(C.cols()) {
    hp.validate();
    if (counts.size() != C.rows()) throw ValidationError("count vector does not match matrix rows");
    keep_.assign(counts.size(), 1.0f);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (hp.subsample_t > 0.0) {
      for (std::size_t w = 0; w < counts.size(); ++w)
        if (counts[w] > 0)
          keep_[w] = static_cast<float>(subsample_keep_prob(counts[w] / total, hp.subsample_t));
    }
    std::uint64_t per_epoch = 0;
    for (const auto& g : groups)
      for (const auto& d : g) per_epoch += d.size();
    planned_ = std::max<std::uint64_t>(1, per_epoch * hp.epochs);
  }

  std::vector<double> run() {
    const std::size_t workers = hp_.deterministic ? 1 : std::max<std::size_t>(1, hp_.threads);
    std::vector<std::size_t> order(groups_.size());
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng(splitmix64(seed_));
    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < hp_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), order_rng);
      std::vector<const IdDocument*> docs;
      for (std::size_t g : order)
        for (const auto& d : groups_[g]) docs.push_back(&d);

      std::vector<WorkerTotals> totals(workers);
      auto work = [&](std::size_t t) {
        const std::size_t begin = docs.size() * t / workers;
        const std::size_t end = docs.size() * (t + 1) / workers;
        Rng rng(splitmix64(seed_ ^ splitmix64(epoch * 1315423911ULL + t + 1)));
        for (std::size_t i = begin; i < end; ++i) process(*docs[i], rng, totals[t]);
      };
      if (workers == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
      }

      WorkerTotals sum;
      for (const auto& t : totals) {
        sum.loss += t.loss;
        sum.examples += t.examples;
      }
      const double mean = sum.examples ? sum.loss / static_cast<double>(sum.examples) : 0.0;
      if (!std::isfinite(mean))
        throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch + 1));
      if (!losses.empty() && mean > 10.0 * losses.front())
        throw DivergenceError("epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(mean) +
                              " exceeds 10x the first-epoch loss " + std::to_string(losses.front()));
      if (!C_.all_finite() || (u_write_ && !finite(u_write_, C_.rows() * dim_)))
        throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch + 1));
      losses.push_back(mean);
    }
    return losses;
  }

 private:
  static bool finite(const float* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(p[i])) return false;
    return true;
  }

  void process(const IdDocument& doc, Rng& rng, WorkerTotals& totals) {
    std::vector<WordIndex>& sent = sentence_buffer();
    sent.clear();
    for (WordIndex w : doc) {
      const float keep = keep_[w];
      if (keep < 1.0f && static_cast<float>(rng() >> 40) * 0x1.0p-24f >= keep) continue;
      sent.push_back(w);
    }
    const double progress = static_cast<double>(processed_.load(std::memory_order_relaxed)) /
                            static_cast<double>(planned_);
    const float lr = static_cast<float>(
        std::max(hp_.min_lr, hp_.initial_lr - (hp_.initial_lr - hp_.min_lr) * progress));

    std::vector<float>& h = hidden_buffer();
    std::vector<float>& err = error_buffer();
    h.resize(dim_);
    err.resize(dim_);
    std::vector<WordIndex>& ctx = context_buffer();
    const std::size_t n = sent.size();
    const std::size_t window = hp_.window;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t span = window - static_cast<std::size_t>(rng() % window);
      ctx.clear();
      const std::size_t lo = pos >= span ? pos - span : 0;
      const std::size_t hi = std::min(n - 1, pos + span);
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != pos) ctx.push_back(sent[j]);
      if (ctx.empty()) continue;

      std::fill(h.begin(), h.end(), 0.0f);
      for (WordIndex c : ctx) {
        const float* row = C_.data() + static_cast<std::size_t>(c) * dim_;
        for (std::size_t d = 0; d < dim_; ++d) h[d] += row[d];
      }
      const float inv = 1.0f / static_cast<float>(ctx.size());
      for (std::size_t d = 0; d < dim_; ++d) h[d] *= inv;
      std::fill(err.begin(), err.end(), 0.0f);

      double loss = 0.0;
      const WordIndex target = sent[pos];
      for (std::size_t k = 0; k <= hp_.negatives; ++k) {
        const WordIndex w = k == 0 ? target : noise_.sample_excluding(rng, target);
        const float label = k == 0 ? 1.0f : 0.0f;
        const float* u = u_read_ + static_cast<std::size_t>(w) * dim_;
        float dot = 0.0f;
        for (std::size_t d = 0; d < dim_; ++d) dot += u[d] * h[d];
        loss += k == 0 ? neg_log_sigmoid(dot) : neg_log_sigmoid(-dot);
        const float g = (label - static_cast<float>(sigmoid(dot))) * lr;
        for (std::size_t d = 0; d < dim_; ++d) err[d] += g * u[d];
        if (u_write_) {
          float* uw = u_write_ + static_cast<std::size_t>(w) * dim_;
          for (std::size_t d = 0; d < dim_; ++d) uw[d] += g * h[d];
        }
      }
      for (WordIndex c : ctx) {
        float* row = C_.data() + static_cast<std::size_t>(c) * dim_;
        for (std::size_t d = 0; d < dim_; ++d) row[d] += err[d];
      }
      totals.loss += loss;
      ++totals.examples;
    }
    processed_.fetch_add(doc.size(), std::memory_order_relaxed);
  }

  static std::vector<WordIndex>& sentence_buffer() {
    thread_local std::vector<WordIndex> b;
    return b;
  }
  static std::vector<WordIndex>& context_buffer() {
    thread_local std::vector<WordIndex> b;
    return b;
  }
  static std::vector<float>& hidden_buffer() {
    thread_local std::vector<float> b;
    return b;
  }
  static std::vector<float>& error_buffer() {
    thread_local std::vector<float> b;
    return b;
  }

  Matrix& C_;
  const float* u_read_;
  float* u_write_;
  const std::vector<std::vector<IdDocument>>& groups_;
  const Hyperparams& hp_;
  std::uint64_t seed_;
  NoiseSampler noise_;
  std::size_t dim_;
  std::vector<float> keep_;
  std::uint64_t planned_ = 1;
  std::atomic<std::uint64_t> processed_{0};
};

void check_shapes(const Matrix& C, const Matrix& U) {
  if (C.rows() != U.rows() || C.cols() != U.cols())
    throw ValidationError("context and target matrices must have identical shape");
}

}  // namespace

std::vector<double> train_joint(Matrix& C, Matrix& U, const std::vector<std::vector<IdDocument>>& groups,
                                std::span<const std::uint64_t> counts, const Hyperparams& hp,
                                std::uint64_t seed) {
  check_shapes(C, U);
  return SgdRun(C, U.data(), U.data(), groups, counts, hp, seed).run();
}

std::vector<double> train_context(Matrix& C, const Matrix& U,
                                  const std::vector<std::vector<IdDocument>>& groups,
                                  std::span<const std::uint64_t> counts, const Hyperparams& hp,
                                  std::uint64_t seed) {
  check_shapes(C, U);
  return SgdRun(C, U.data(), nullptr, groups, counts, hp, seed).run();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Compass procedure

std::uint64_t CompassModel::fingerprint() const {
  Fnv1a h;
  const std::uint64_t u = target.checksum();
  h.update(&u, sizeof u);
  if (vocab)
    for (const auto& w : vocab->words()) {
      h.update(w);
      h.update("\n", 1);
    }
  return h.digest();
}

std::size_t SliceEmbeddings::trained_count() const {
  return static_cast<std::size_t>(std::count(trained.begin(), trained.end(), true));
}

std::uint64_t slice_seed(std::uint64_t seed, const SliceId& id) {
  Fnv1a h;
  h.update(&seed, sizeof seed);
  h.update(id.name());
  return h.digest();
}

CompassModel train_compass(std::span<const CorpusSlice> slices, std::shared_ptr<const Vocabulary> vocab,
                           const Hyperparams& hp) {
  hp.validate();
  if (!vocab || vocab->empty()) throw ValidationError("compass training needs a non-empty vocabulary");
  if (vocab->slices().size() != slices.size())
    throw DataError("vocabulary was built over " + std::to_string(vocab->slices().size()) +
                    " slices but " + std::to_string(slices.size()) + " were given");
  std::vector<std::vector<detail::IdDocument>> groups;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (vocab->slices()[s] != slices[s].id || vocab->slice_total(s) != slices[s].token_count)
      throw DataError("vocabulary does not match slice '" + slices[s].id.name() + "'");
    groups.push_back(detail::to_ids(slices[s], *vocab));
  }

  CompassModel model;
  model.vocab = vocab;
  model.hyperparams = hp;
  model.context = Matrix(vocab->size(), hp.dim);
  model.target = Matrix(vocab->size(), hp.dim, 0.0f);
  Rng init(hp.seed);
  detail::init_context(model.context, init);
  model.epoch_loss = detail::train_joint(model.context, model.target, groups, vocab->global_counts(), hp,
                                         hp.seed ^ 0x636f6d70617373ULL);
  return model;
}

SliceEmbeddings train_slice(const CorpusSlice& slice, const CompassModel& compass, const Hyperparams& hp) {
  hp.validate();
  if (!compass.vocab) throw ValidationError("compass has no vocabulary");
  const Vocabulary& vocab = *compass.vocab;
  if (compass.target.rows() != vocab.size() || compass.context.rows() != vocab.size())
    throw DataError("compass matrices do not match its vocabulary");
  if (hp.dim != compass.target.cols())
    throw ValidationError("dim " + std::to_string(hp.dim) + " differs from compass dim " +
                          std::to_string(compass.target.cols()));
  const std::size_t pos = vocab.require_slice(slice.id);
  if (vocab.slice_total(pos) != slice.token_count)
    throw DataError("slice '" + slice.id.name() + "' differs from the corpus the compass vocabulary saw");

  SliceEmbeddings out;
  out.slice = slice.id;
  out.vocab = compass.vocab;
  out.context = compass.context;
  out.compass_fingerprint = compass.fingerprint();
  out.token_count = slice.token_count;
  out.hyperparams = hp;
  const auto& counts = vocab.slice_counts(pos);
  out.trained.resize(vocab.size());
  for (std::size_t w = 0; w < vocab.size(); ++w) out.trained[w] = counts[w] > 0;

  const std::vector<std::vector<detail::IdDocument>> groups{detail::to_ids(slice, vocab)};
  out.epoch_loss = detail::train_context(out.context, compass.target, groups, counts, hp,
                                         slice_seed(hp.seed, slice.id));
  return out;
}

SliceEmbeddings train_independent(const CorpusSlice& slice, std::shared_ptr<const Vocabulary> vocab,
                                  const Hyperparams& hp) {
  hp.validate();
  const std::size_t pos = vocab->require_slice(slice.id);
  SliceEmbeddings out;
  out.slice = slice.id;
  out.vocab = vocab;
  out.token_count = slice.token_count;
  out.hyperparams = hp;
  out.context = Matrix(vocab->size(), hp.dim);
  Matrix target(vocab->size(), hp.dim, 0.0f);
  Rng init(slice_seed(hp.seed, slice.id));
  detail::init_context(out.context, init);
  const auto& counts = vocab->slice_counts(pos);
  out.trained.resize(vocab->size());
  for (std::size_t w = 0; w < vocab->size(); ++w) out.trained[w] = counts[w] > 0;
  const std::vector<std::vector<detail::IdDocument>> groups{detail::to_ids(slice, *vocab)};
  out.epoch_loss = detail::train_joint(out.context, target, groups, counts, hp,
                                       slice_seed(hp.seed, slice.id) + 1);
  out.compass_fingerprint = target.checksum();
  return out;
}

}  // namespace twec
