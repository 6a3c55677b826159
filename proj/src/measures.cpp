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

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "twec/csv.hpp"
#include "twec/error.hpp"

namespace twec {

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedStatistic("cosine with a zero-norm vector is undefined");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  constexpr double limit = 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
  if (std::abs(c) > limit) throw std::logic_error("cosine overshoots +-1 by more than 4 ULPs");
  return std::clamp(c, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Exact top-k

NeighborIndex::NeighborIndex(const SliceEmbeddings& model) : model_(&model) {
  const Matrix& C = model.context;
  const std::size_t dim = C.cols();
  slot_.assign(C.rows(), -1);
  for (std::size_t w = 0; w < C.rows(); ++w) {
    if (!model.is_trained(static_cast<WordIndex>(w))) continue;
    double n2 = 0.0;
    for (float v : C.row(w)) n2 += static_cast<double>(v) * v;
    if (n2 == 0.0) continue;
    slot_[w] = static_cast<std::ptrdiff_t>(rows_.size());
    rows_.push_back(static_cast<WordIndex>(w));
  }
  unit_.resize(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto row = C.row(rows_[r]);
    double n2 = 0.0;
    for (float v : row) n2 += static_cast<double>(v) * v;
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t d = 0; d < dim; ++d)
      unit_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = static_cast<float>(row[d] * inv);
  }
  // Bound on |float dot of unit rows - exact cosine|, with a factor 2 of slack.
  margin_ = static_cast<float>(2.0 * (static_cast<double>(dim) + 8.0) * FLT_EPSILON);
}

void NeighborIndex::select(WordIndex query, const float* scores, std::size_t k, NeighborList& out) const {
  const std::size_t n = rows_.size();
  const std::size_t self = static_cast<std::size_t>(slot_[query]);
  const std::size_t available = n - 1;
  std::vector<std::size_t> candidates;
  if (k >= available) {
    out.truncated = k > available;
    candidates.reserve(available);
    for (std::size_t r = 0; r < n; ++r)
      if (r != self) candidates.push_back(r);
  } else {
    std::vector<float> approx;
    approx.reserve(available);
    for (std::size_t r = 0; r < n; ++r)
      if (r != self) approx.push_back(scores[r]);
    std::nth_element(approx.begin(), approx.begin() + static_cast<std::ptrdiff_t>(k - 1), approx.end(),
                     std::greater<float>());
    const float threshold = approx[k - 1] - 2.0f * margin_;
    for (std::size_t r = 0; r < n; ++r)
      if (r != self && scores[r] >= threshold) candidates.push_back(r);
  }
  const auto q = model_->context.row(query);
  out.neighbors.clear();
  out.neighbors.reserve(candidates.size());
  for (std::size_t r : candidates)
    out.neighbors.push_back({rows_[r], cosine(q, model_->context.row(rows_[r]))});
  auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    return a.cosine != b.cosine ? a.cosine > b.cosine : a.word < b.word;
  };
  const std::size_t keep = std::min(k, out.neighbors.size());
  std::partial_sort(out.neighbors.begin(), out.neighbors.begin() + static_cast<std::ptrdiff_t>(keep),
                    out.neighbors.end(), by_rank);
  out.neighbors.resize(keep);
}

std::vector<NeighborList> NeighborIndex::query_batch(std::span<const WordIndex> words, std::size_t k) const {
  if (k < 1) throw ValidationError("k must be >= 1");
  for (WordIndex w : words) {
    if (w >= slot_.size()) throw ValidationError("word index out of range");
    if (!model_->is_trained(w))
      throw DataError("word '" + model_->vocab->word(w) + "' is not trained in slice " + model_->slice.name());
    if (slot_[w] < 0) throw UndefinedStatistic("word '" + model_->vocab->word(w) + "' has a zero vector");
  }
  std::vector<NeighborList> out(words.size());
  constexpr std::size_t kBatch = 64;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic> queries;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic> scores;
  for (std::size_t start = 0; start < words.size(); start += kBatch) {
    const std::size_t b = std::min(kBatch, words.size() - start);
    queries.resize(unit_.cols(), static_cast<Eigen::Index>(b));
    for (std::size_t j = 0; j < b; ++j)
      queries.col(static_cast<Eigen::Index>(j)) = unit_.row(slot_[words[start + j]]).transpose();
    scores.noalias() = unit_ * queries;
    for (std::size_t j = 0; j < b; ++j)
      select(words[start + j], scores.col(static_cast<Eigen::Index>(j)).data(), k, out[start + j]);
  }
  return out;
}

NeighborList NeighborIndex::query(WordIndex word, std::size_t k) const {
  const WordIndex one[1] = {word};
  return std::move(query_batch(one, k).front());
}

NeighborList nearest_neighbors(const std::string& word, const SliceEmbeddings& model, std::size_t k) {
  const auto w = model.vocab->index(word);
  return NeighborIndex(model).query(w, k);
}

SndResult snd_from_neighbors(const NeighborList& list, std::size_t n) {
  SndResult r;
  r.neighbors_used = std::min(n, list.neighbors.size());
  r.truncated = list.truncated || list.neighbors.size() < n;
  if (r.neighbors_used == 0) return r;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.neighbors_used; ++i) sum += list.neighbors[i].cosine;
  r.value = sum / static_cast<double>(r.neighbors_used);
  return r;
}

SndResult snd(const std::string& word, const SliceEmbeddings& model, std::size_t n) {
  if (n < 1) throw ValidationError("SND neighbourhood size must be >= 1");
  const auto w = model.vocab->index(word);
  if (!model.is_trained(w)) return {};
  return snd_from_neighbors(NeighborIndex(model).query(w, n), n);
}

std::optional<double> topic_vehicle_similarity(const Metaphor& m, const SliceEmbeddings& model) {
  const auto t = model.vocab->index(m.topic);
  const auto v = model.vocab->index(m.vehicle);
  if (!model.is_trained(t) || !model.is_trained(v)) return std::nullopt;
  return cosine(model.context.row(t), model.context.row(v));
}

namespace {

void require_aligned(const SliceEmbeddings& a, const SliceEmbeddings& b) {
  if (a.compass_fingerprint != b.compass_fingerprint || a.context.rows() != b.context.rows())
    throw AlignmentError("slices " + a.slice.name() + " and " + b.slice.name() +
                         " were trained against different compasses (fingerprints " +
                         hex64(a.compass_fingerprint) + " and " + hex64(b.compass_fingerprint) + ")");
}

}  // namespace

std::optional<double> vector_coherence(const std::string& word, const SliceEmbeddings& t1,
                                       const SliceEmbeddings& t2) {
  require_aligned(t1, t2);
  const auto w = t1.vocab->index(word);
  if (!t1.is_trained(w) || !t2.is_trained(w)) return std::nullopt;
  return cosine(t1.context.row(w), t2.context.row(w));
}

std::string to_string(Role role) { return role == Role::Topic ? "topic" : "vehicle"; }

Role parse_role(const std::string& text) {
  if (text == "topic") return Role::Topic;
  if (text == "vehicle") return Role::Vehicle;
  throw ValidationError("role must be 'topic' or 'vehicle', got '" + text + "'");
}

// ---------------------------------------------------------------------------
// Whole-dataset pass

namespace {

struct SliceResults {
  std::map<WordIndex, SndResult> snd;
};

SliceResults slice_snd(const SliceEmbeddings& model, const std::vector<WordIndex>& words, std::size_t n) {
  SliceResults out;
  std::vector<WordIndex> trained;
  for (WordIndex w : words)
    if (model.is_trained(w)) trained.push_back(w);
  if (trained.empty()) return out;
  const NeighborIndex index(model);
  const auto lists = index.query_batch(trained, n);
  for (std::size_t i = 0; i < trained.size(); ++i) out.snd[trained[i]] = snd_from_neighbors(lists[i], n);
  return out;
}

}  // namespace

MeasureTables measure_all(const std::vector<Metaphor>& metaphors, const std::vector<SliceEmbeddings>& models,
                          const Vocabulary& vocab, const MeasureOptions& options) {
  if (options.snd_n < 1) throw ValidationError("SND neighbourhood size must be >= 1");
  if (models.empty()) throw ValidationError("measure_all needs at least one slice model");
  for (const auto& m : models) {
    require_aligned(models.front(), m);
    if (m.context.rows() != vocab.size()) throw DataError("slice " + m.slice.name() + " does not match the vocabulary");
  }

  // Slices in vocabulary (configuration) order.
  std::vector<const SliceEmbeddings*> ordered;
  for (const auto& id : vocab.slices())
    for (const auto& m : models)
      if (m.slice == id) ordered.push_back(&m);
  if (ordered.size() != models.size()) {
    std::set<SliceId> seen;
    for (const auto& m : models) {
      vocab.require_slice(m.slice);
      if (!seen.insert(m.slice).second) throw DataError("slice " + m.slice.name() + " given twice");
    }
  }

  std::string missing;
  std::size_t n_missing = 0;
  for (const auto& m : metaphors) {
    for (const auto* w : {&m.topic, &m.vehicle})
      if (!vocab.contains(*w)) {
        missing += (n_missing++ ? "; " : "") + m.id + " ('" + *w + "')";
      }
  }
  if (n_missing) throw DataError(std::to_string(n_missing) + " metaphor term(s) missing from the vocabulary: " + missing);

  std::vector<WordIndex> words;
  {
    std::set<WordIndex> uniq;
    for (const auto& m : metaphors) {
      uniq.insert(vocab.index(m.topic));
      uniq.insert(vocab.index(m.vehicle));
    }
    words.assign(uniq.begin(), uniq.end());
  }

  std::vector<SliceResults> per_slice(ordered.size());
  if (options.threads > 1 && ordered.size() > 1) {
    std::vector<std::future<SliceResults>> jobs;
    for (const auto* m : ordered)
      jobs.push_back(std::async(std::launch::async, slice_snd, std::cref(*m), std::cref(words), options.snd_n));
    for (std::size_t s = 0; s < jobs.size(); ++s) per_slice[s] = jobs[s].get();
  } else {
    for (std::size_t s = 0; s < ordered.size(); ++s) per_slice[s] = slice_snd(*ordered[s], words, options.snd_n);
  }

  MeasureTables out;
  if (metaphors.empty()) return out;
  for (const auto& m : metaphors) {
    const auto t = vocab.index(m.topic);
    const auto v = vocab.index(m.vehicle);
    for (std::size_t s = 0; s < ordered.size(); ++s) {
      const SliceEmbeddings& model = *ordered[s];
      MeasureRecord r;
      r.metaphor_id = m.id;
      r.slice = model.slice;
      r.cs = topic_vehicle_similarity(m, model);
      const auto& snds = per_slice[s].snd;
      if (auto it = snds.find(t); it != snds.end()) {
        r.snd_topic = it->second.value;
        r.truncated_neighborhood |= it->second.truncated;
      }
      if (auto it = snds.find(v); it != snds.end()) {
        r.snd_vehicle = it->second.value;
        r.truncated_neighborhood |= it->second.truncated;
      }
      r.freq_topic = relative_log_frequency(m.topic, model.slice, vocab);
      r.freq_vehicle = relative_log_frequency(m.vehicle, model.slice, vocab);
      out.measures.push_back(std::move(r));
    }
  }

  // genre -> slices ordered by epoch
  std::map<std::string, std::vector<const SliceEmbeddings*>> by_genre;
  std::map<std::string, std::vector<const SliceEmbeddings*>> by_epoch;
  for (const auto* m : ordered) {
    by_genre[m->slice.genre].push_back(m);
    by_epoch[m->slice.epoch].push_back(m);
  }
  for (auto& [g, v] : by_genre)
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->slice.epoch < b->slice.epoch; });
  for (auto& [e, v] : by_epoch)
    std::sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->slice.genre < b->slice.genre; });

  std::set<std::pair<std::string, Role>> terms;
  for (const auto& m : metaphors) {
    terms.insert({m.topic, Role::Topic});
    terms.insert({m.vehicle, Role::Vehicle});
  }
  for (const auto& [word, role] : terms) {
    for (const auto& [genre, slices] : by_genre) {
      CoherenceRecord r{word, role, genre, std::nullopt};
      if (slices.size() >= 2) r.vc = vector_coherence(word, *slices.front(), *slices.back());
      out.coherence.push_back(std::move(r));
    }
    if (options.cross_genre) {
      for (const auto& [epoch, slices] : by_epoch)
        for (std::size_t a = 0; a < slices.size(); ++a)
          for (std::size_t b = a + 1; b < slices.size(); ++b)
            out.cross_genre.push_back({word, role, epoch, slices[a]->slice.genre, slices[b]->slice.genre,
                                       vector_coherence(word, *slices[a], *slices[b])});
    }
  }
  return out;
}

namespace {

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  for (const auto& x : xs) {
    if (!x) return std::nullopt;
    sum += *x;
  }
  return sum / static_cast<double>(xs.size());
}

}  // namespace

MeasureTables average_runs(const std::vector<MeasureTables>& runs) {
  if (runs.empty()) throw ValidationError("no runs to average");
  MeasureTables out = runs.front();
  const std::size_t k = runs.size();
  for (const auto& run : runs)
    if (run.measures.size() != out.measures.size() || run.coherence.size() != out.coherence.size() ||
        run.cross_genre.size() != out.cross_genre.size())
      throw DataError("replicated runs produced tables of different shape");
  auto collect = [&](auto get) {
    std::vector<std::optional<double>> xs;
    xs.reserve(k);
    for (const auto& run : runs) xs.push_back(get(run));
    return mean_of(xs);
  };
  for (std::size_t i = 0; i < out.measures.size(); ++i) {
    auto& r = out.measures[i];
    r.cs = collect([&](const MeasureTables& t) { return t.measures[i].cs; });
    r.snd_topic = collect([&](const MeasureTables& t) { return t.measures[i].snd_topic; });
    r.snd_vehicle = collect([&](const MeasureTables& t) { return t.measures[i].snd_vehicle; });
    r.freq_topic = collect([&](const MeasureTables& t) { return t.measures[i].freq_topic; });
    r.freq_vehicle = collect([&](const MeasureTables& t) { return t.measures[i].freq_vehicle; });
    for (const auto& run : runs) r.truncated_neighborhood |= run.measures[i].truncated_neighborhood;
  }
  for (std::size_t i = 0; i < out.coherence.size(); ++i)
    out.coherence[i].vc = collect([&](const MeasureTables& t) { return t.coherence[i].vc; });
  for (std::size_t i = 0; i < out.cross_genre.size(); ++i)
    out.cross_genre[i].vc = collect([&](const MeasureTables& t) { return t.cross_genre[i].vc; });
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void write_measures(std::ostream& out, const std::vector<MeasureRecord>& records) {
  write_csv_row(out, kMeasureHeader);
  for (const auto& r : records)
    write_csv_row(out, {r.metaphor_id, r.slice.epoch, r.slice.genre, format_measure(r.cs),
                        format_measure(r.snd_topic), format_measure(r.snd_vehicle), format_measure(r.freq_topic),
                        format_measure(r.freq_vehicle)});
}

std::vector<MeasureRecord> read_measures(std::istream& in, const std::string& source) {
  const auto table = CsvTable::read(in, source);
  table.expect_header(kMeasureHeader);
  std::vector<MeasureRecord> out;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::string where = source + ":" + std::to_string(table.line_of(i));
    MeasureRecord r;
    r.metaphor_id = row[0];
    r.slice = SliceId{row[1], row[2]};
    r.cs = parse_measure(row[3], where);
    r.snd_topic = parse_measure(row[4], where);
    r.snd_vehicle = parse_measure(row[5], where);
    r.freq_topic = parse_measure(row[6], where);
    r.freq_vehicle = parse_measure(row[7], where);
    out.push_back(std::move(r));
  }
  return out;
}

void write_coherence(std::ostream& out, const std::vector<CoherenceRecord>& records) {
  write_csv_row(out, kCoherenceHeader);
  for (const auto& r : records) write_csv_row(out, {r.word, to_string(r.role), r.genre, format_measure(r.vc)});
}

std::vector<CoherenceRecord> read_coherence(std::istream& in, const std::string& source) {
  const auto table = CsvTable::read(in, source);
  table.expect_header(kCoherenceHeader);
  std::vector<CoherenceRecord> out;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::string where = source + ":" + std::to_string(table.line_of(i));
    out.push_back({row[0], parse_role(row[1]), row[2], parse_measure(row[3], where)});
  }
  return out;
}

void write_cross_genre(std::ostream& out, const std::vector<CrossGenreRecord>& records) {
  write_csv_row(out, kCrossGenreHeader);
  for (const auto& r : records)
    write_csv_row(out, {r.word, to_string(r.role), r.epoch, r.genre_a, r.genre_b, format_measure(r.vc)});
}

}  // namespace twec
