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

#ifndef TWEC_MEASURES_HPP
#define TWEC_MEASURES_HPP

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twec/metaphors.hpp"
#include "twec/training.hpp"

namespace twec {

/// (a.b) / (|a||b|) accumulated in double and clamped to [-1, 1]. Throws
/// UndefinedStatistic for a zero vector; an overshoot of more than 4 ULPs
/// past +-1 is treated as a numeric bug (std::logic_error).
double cosine(std::span<const float> a, std::span<const float> b);

struct Neighbor {
  WordIndex word;
  double cosine;
  bool operator==(const Neighbor&) const = default;
};

struct NeighborList {
  std::vector<Neighbor> neighbors;  // descending cosine, ties by vocabulary index
  bool truncated = false;           // fewer eligible words than requested
};

/// Exact top-k over the trained rows of one slice model. A single-precision
/// matrix product over unit-normalised rows shortlists candidates with a
/// provable error margin; the shortlist is rescored with cosine(), so results
/// are identical to a full scan with cosine().
class NeighborIndex {
 public:
  explicit NeighborIndex(const SliceEmbeddings& model);

  std::size_t eligible_count() const noexcept { return rows_.size(); }

  /// Query word must be trained in the slice; it never appears in its own list.
  NeighborList query(WordIndex word, std::size_t k) const;
  std::vector<NeighborList> query_batch(std::span<const WordIndex> words, std::size_t k) const;

 private:
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  void select(WordIndex query, const float* scores, std::size_t k, NeighborList& out) const;

  const SliceEmbeddings* model_;
  std::vector<WordIndex> rows_;        // eligible word per matrix row
  std::vector<std::ptrdiff_t> slot_;   // word -> matrix row or -1
  RowMatrix unit_;                     // eligible x dim
  float margin_ = 0.0f;
};

NeighborList nearest_neighbors(const std::string& word, const SliceEmbeddings& model, std::size_t k);

struct SndResult {
  std::optional<double> value;  // nullopt: word untrained in the slice
  bool truncated = false;
  std::size_t neighbors_used = 0;
};

/// Mean cosine to the n nearest neighbours.
SndResult snd(const std::string& word, const SliceEmbeddings& model, std::size_t n = 500);
SndResult snd_from_neighbors(const NeighborList& list, std::size_t n);

/// Cosine between the topic and vehicle rows; nullopt when either is untrained.
std::optional<double> topic_vehicle_similarity(const Metaphor& m, const SliceEmbeddings& model);

/// Cosine between a word's rows in two aligned spaces. Throws AlignmentError
/// unless both were trained against the same compass.
std::optional<double> vector_coherence(const std::string& word, const SliceEmbeddings& t1,
                                       const SliceEmbeddings& t2);

enum class Role { Topic, Vehicle };
std::string to_string(Role role);
Role parse_role(const std::string& text);

struct MeasureRecord {
  std::string metaphor_id;
  SliceId slice;
  std::optional<double> cs;
  std::optional<double> snd_topic;
  std::optional<double> snd_vehicle;
  std::optional<double> freq_topic;
  std::optional<double> freq_vehicle;
  bool truncated_neighborhood = false;
};

struct CoherenceRecord {
  std::string word;
  Role role = Role::Topic;
  std::string genre;
  std::optional<double> vc;
};

/// Same word compared across genres within one epoch (opt-in).
struct CrossGenreRecord {
  std::string word;
  Role role = Role::Topic;
  std::string epoch;
  std::string genre_a;
  std::string genre_b;
  std::optional<double> vc;
};

struct MeasureOptions {
  std::size_t snd_n = 500;
  std::size_t threads = 1;
  bool cross_genre = false;
};

struct MeasureTables {
  std::vector<MeasureRecord> measures;        // metaphor order, then slice order
  std::vector<CoherenceRecord> coherence;     // sorted by word, role, genre
  std::vector<CrossGenreRecord> cross_genre;  // empty unless requested
};

/// Every measure for every metaphor in every slice. Models must share one
/// compass; every topic and vehicle must be in the vocabulary (DataError
/// listing all offending metaphors otherwise). VC pairs the earliest and
/// latest epoch of each genre.
MeasureTables measure_all(const std::vector<Metaphor>& metaphors, const std::vector<SliceEmbeddings>& models,
                          const Vocabulary& vocab, const MeasureOptions& options = {});

/// Field-wise mean over replicated runs (NA stays NA).
MeasureTables average_runs(const std::vector<MeasureTables>& runs);

inline const std::vector<std::string> kMeasureHeader = {
    "metaphor_id", "epoch", "genre", "cs", "snd_topic", "snd_vehicle", "freq_topic", "freq_vehicle"};
inline const std::vector<std::string> kCoherenceHeader = {"word", "role", "genre", "vc"};
inline const std::vector<std::string> kCrossGenreHeader = {"word", "role", "epoch", "genre_a", "genre_b", "vc"};

void write_measures(std::ostream& out, const std::vector<MeasureRecord>& records);
std::vector<MeasureRecord> read_measures(std::istream& in, const std::string& source = "<measures>");
void write_coherence(std::ostream& out, const std::vector<CoherenceRecord>& records);
std::vector<CoherenceRecord> read_coherence(std::istream& in, const std::string& source = "<coherence>");
void write_cross_genre(std::ostream& out, const std::vector<CrossGenreRecord>& records);

}  // namespace twec

#endif  // TWEC_MEASURES_HPP
