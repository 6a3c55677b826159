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

#ifndef TWEC_SYNTHCORPUS_HPP
#define TWEC_SYNTHCORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twec/corpus.hpp"

namespace twec {

/// Where a planted word draws its contexts from in one slice.
struct ContextSource {
  enum class Kind { Cluster, Random, Absent };
  Kind kind = Kind::Cluster;
  std::size_t cluster = 0;

  static ContextSource parse(const std::string& text);
  std::string str() const;
  bool operator==(const ContextSource&) const = default;
};

struct WordPlant {
  std::string word;
  std::map<SliceId, ContextSource> sources;
  std::optional<std::size_t> occurrences;  // per slice; spec default otherwise
};

/// Topic and vehicle with their own clusters; a fraction `overlap` of their
/// occurrences are joint episodes drawn from a shared cluster, where the two
/// words sit inside one window.
struct PairPlant {
  std::string topic;
  std::string vehicle;
  std::size_t topic_cluster = 0;
  std::size_t vehicle_cluster = 0;
  std::size_t shared_cluster = 0;
  std::map<SliceId, double> overlap;
  std::optional<std::size_t> occurrences;
};

struct PlantSpec {
  std::size_t vocab_size = 2000;  // background plus planted words
  std::uint64_t tokens_per_slice = 200000;
  std::uint64_t seed = 1;
  std::vector<SliceId> slices = {SliceId{"e19", "lit"}, SliceId{"e21", "lit"}};
  std::size_t cluster_size = 20;
  std::size_t window = 5;        // context tokens on each side of a plant
  std::size_t doc_length = 1000;
  std::size_t occurrences = 200;
  /// Uniform: unigram noise. Clustered: runs of segment_length tokens, each
  /// run drawn from one random cluster with segment_noise uniform tokens mixed in.
  enum class Background { Uniform, Clustered };
  Background background = Background::Clustered;
  std::size_t segment_length = 10;
  double segment_noise = 0.2;
  std::vector<WordPlant> plants;
  std::vector<PairPlant> pairs;

  std::size_t background_size() const;
  std::size_t cluster_count() const { return cluster_size ? background_size() / cluster_size : 0; }

  /// Throws ValidationError for an infeasible or inconsistent spec.
  void validate() const;

  /// `key = value` lines followed by `[plant]` and `[pair]` blocks.
  static PlantSpec parse(std::istream& in, const std::string& source = "<spec>");
  static PlantSpec load(const std::filesystem::path& path);
  void write(std::ostream& out) const;
};

struct SynthCorpus {
  std::vector<CorpusSlice> slices;               // spec slice order
  std::vector<std::string> background;           // w0000, w0001, ...
  std::vector<std::vector<std::string>> clusters;
};

std::string background_word(std::size_t i);

/// Deterministic given spec.seed.
SynthCorpus generate(const PlantSpec& spec);

/// Writes <slice>.txt per slice, clusters.tsv and the normalised spec.
void write_synth_corpus(const std::filesystem::path& dir, const PlantSpec& spec, const SynthCorpus& corpus);

/// Fraction of `a` occurrences with `b` at most `window` tokens away in the same document.
double cooccurrence_rate(const CorpusSlice& slice, const std::string& a, const std::string& b, std::size_t window);

}  // namespace twec

#endif  // TWEC_SYNTHCORPUS_HPP
