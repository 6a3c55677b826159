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

#include "twec/synthcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "twec/error.hpp"
#include "twec/keyvalue.hpp"
#include "twec/text.hpp"
#include "twec/training.hpp"

namespace twec {

ContextSource ContextSource::parse(const std::string& text) {
  if (text == "random") return {Kind::Random, 0};
  if (text == "absent") return {Kind::Absent, 0};
  return {Kind::Cluster, static_cast<std::size_t>(parse_u64(text, "cluster index"))};
}

std::string ContextSource::str() const {
  switch (kind) {
    case Kind::Random:
      return "random";
    case Kind::Absent:
      return "absent";
    case Kind::Cluster:
      break;
  }
  return std::to_string(cluster);
}

std::string background_word(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "w%04zu", i);
  return buf;
}

std::size_t PlantSpec::background_size() const {
  const std::size_t planted = plants.size() + 2 * pairs.size();
  return vocab_size > planted ? vocab_size - planted : 0;
}

namespace {

std::size_t occurrences_of(const PlantSpec& spec, const std::optional<std::size_t>& own) {
  return own.value_or(spec.occurrences);
}

std::size_t shared_episodes(double overlap, std::size_t occurrences) {
  return static_cast<std::size_t>(std::llround(overlap * static_cast<double>(occurrences)));
}

}  // namespace

void PlantSpec::validate() const {
  if (slices.empty()) throw ValidationError("synth spec: no slices");
  if (std::set<SliceId>(slices.begin(), slices.end()).size() != slices.size())
    throw ValidationError("synth spec: duplicate slice");
  if (cluster_size < 1) throw ValidationError("synth spec: cluster_size must be >= 1");
  if (window < 1) throw ValidationError("synth spec: window must be >= 1");
  if (doc_length < 1) throw ValidationError("synth spec: doc_length must be >= 1");
  if (segment_length < 1) throw ValidationError("synth spec: segment_length must be >= 1");
  if (!(segment_noise >= 0.0 && segment_noise <= 1.0))
    throw ValidationError("synth spec: segment_noise must lie in [0, 1]");
  if (background == Background::Clustered && cluster_count() == 0)
    throw ValidationError("synth spec: clustered background needs at least one full cluster");
  if (tokens_per_slice < 10 * static_cast<std::uint64_t>(vocab_size))
    throw ValidationError("synth spec: tokens_per_slice must be at least 10 x vocab_size");
  if (background_size() < 1) throw ValidationError("synth spec: vocab_size leaves no background words");

  std::set<std::string> names;
  auto add_name = [&](const std::string& w) {
    if (w.empty()) throw ValidationError("synth spec: empty planted word");
    if (split_whitespace(w).size() != 1) throw ValidationError("synth spec: planted word '" + w + "' is not one token");
    if (!names.insert(w).second) throw ValidationError("synth spec: planted word '" + w + "' used twice");
    if (w.size() == 5 && w[0] == 'w' && std::all_of(w.begin() + 1, w.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw ValidationError("synth spec: planted word '" + w + "' collides with the background vocabulary");
  };
  const std::size_t n_clusters = cluster_count();
  auto check_cluster = [&](std::size_t c, const std::string& who) {
    if (c >= n_clusters)
      throw ValidationError("synth spec: " + who + " uses cluster " + std::to_string(c) + " but only " +
                            std::to_string(n_clusters) + " clusters of " + std::to_string(cluster_size) +
                            " fit in the background vocabulary");
  };

  std::uint64_t plant_tokens = 0;  // largest per-slice episode volume, checked below
  std::map<SliceId, std::uint64_t> per_slice;
  for (const auto& p : plants) {
    add_name(p.word);
    for (const auto& s : slices) {
      auto it = p.sources.find(s);
      if (it == p.sources.end())
        throw ValidationError("synth spec: plant '" + p.word + "' has no context source for slice " + s.name());
      if (it->second.kind == ContextSource::Kind::Cluster) check_cluster(it->second.cluster, "plant '" + p.word + "'");
      if (it->second.kind != ContextSource::Kind::Absent)
        per_slice[s] += occurrences_of(*this, p.occurrences) * (2 * window + 1);
    }
    for (const auto& [s, src] : p.sources)
      if (std::find(slices.begin(), slices.end(), s) == slices.end())
        throw ValidationError("synth spec: plant '" + p.word + "' names unknown slice " + s.name());
  }
  for (const auto& p : pairs) {
    add_name(p.topic);
    add_name(p.vehicle);
    const std::string who = "pair '" + p.topic + "/" + p.vehicle + "'";
    check_cluster(p.topic_cluster, who);
    check_cluster(p.vehicle_cluster, who);
    check_cluster(p.shared_cluster, who);
    const std::size_t occ = occurrences_of(*this, p.occurrences);
    for (const auto& s : slices) {
      auto it = p.overlap.find(s);
      if (it == p.overlap.end()) throw ValidationError("synth spec: " + who + " has no overlap for slice " + s.name());
      if (!(it->second >= 0.0 && it->second <= 1.0))
        throw ValidationError("synth spec: " + who + " overlap must lie in [0, 1]");
      const std::size_t shared = shared_episodes(it->second, occ);
      per_slice[s] += shared * (2 * window + 3) + 2 * (occ - shared) * (2 * window + 1);
    }
    for (const auto& [s, v] : p.overlap)
      if (std::find(slices.begin(), slices.end(), s) == slices.end())
        throw ValidationError("synth spec: " + who + " names unknown slice " + s.name());
  }
  for (const auto& [s, n] : per_slice) plant_tokens = std::max(plant_tokens, n);
  if (plant_tokens > tokens_per_slice)
    throw ValidationError("synth spec: planted episodes need " + std::to_string(plant_tokens) +
                          " tokens, more than tokens_per_slice");
}

// ---------------------------------------------------------------------------
// Spec file

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const auto item = trim(std::string_view(text).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// "3" (every slice) or "e19_lit:3, e21_lit:random"
template <typename T, typename Parse>
std::map<SliceId, T> per_slice_values(const std::string& text, const std::vector<SliceId>& slices, Parse parse) {
  std::map<SliceId, T> out;
  const auto items = split_list(text);
  if (items.size() == 1 && items[0].find(':') == std::string::npos) {
    for (const auto& s : slices) out[s] = parse(items[0]);
    return out;
  }
  for (const auto& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("expected SLICE:VALUE, got '" + item + "'");
    const auto id = SliceId::parse(std::string(trim(std::string_view(item).substr(0, colon))));
    if (!out.emplace(id, parse(std::string(trim(std::string_view(item).substr(colon + 1))))).second)
      throw ValidationError("slice " + id.name() + " listed twice");
  }
  return out;
}

struct Block {
  std::string kind;  // "", "plant", "pair"
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::size_t> lines;
};

}  // namespace

PlantSpec PlantSpec::parse(std::istream& in, const std::string& source) {
  std::vector<Block> blocks(1);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t == "[plant]" || t == "[pair]") {
        blocks.push_back({std::string(t.substr(1, t.size() - 2)), line_no, {}, {}});
        continue;
      }
      throw ParseError(source, line_no, "unknown section " + std::string(t));
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
    blocks.back().entries.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
    blocks.back().lines.push_back(line_no);
  }

  PlantSpec spec;
  auto u64 = [](const std::string& v, const std::string& key) { return parse_u64(v, key); };
  for (std::size_t i = 0; i < blocks[0].entries.size(); ++i) {
    const auto& [k, v] = blocks[0].entries[i];
    try {
      if (k == "vocab_size") spec.vocab_size = u64(v, k);
      else if (k == "tokens_per_slice") spec.tokens_per_slice = u64(v, k);
      else if (k == "seed") spec.seed = u64(v, k);
      else if (k == "cluster_size") spec.cluster_size = u64(v, k);
      else if (k == "window") spec.window = u64(v, k);
      else if (k == "doc_length") spec.doc_length = u64(v, k);
      else if (k == "occurrences") spec.occurrences = u64(v, k);
      else if (k == "background") {
        if (v == "uniform") spec.background = Background::Uniform;
        else if (v == "clustered") spec.background = Background::Clustered;
        else throw ValidationError("background must be 'uniform' or 'clustered'");
      } else if (k == "segment_length") spec.segment_length = u64(v, k);
      else if (k == "segment_noise") spec.segment_noise = parse_double(v, k);
      else if (k == "slices") {
        spec.slices.clear();
        for (const auto& s : split_list(v)) spec.slices.push_back(SliceId::parse(s));
      } else throw ValidationError("unknown key '" + k + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, blocks[0].lines[i], e.what());
    }
  }

  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const Block& block = blocks[b];
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    for (std::size_t i = 0; i < block.entries.size(); ++i) {
      const auto& [k, v] = block.entries[i];
      if (!kv.emplace(k, std::make_pair(v, block.lines[i])).second)
        throw ParseError(source, block.lines[i], "key '" + k + "' repeated in block");
    }
    auto need = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw ParseError(source, block.line, "[" + block.kind + "] block needs '" + key + "'");
      return it->second.first;
    };
    auto allowed = [&](std::initializer_list<const char*> keys) {
      for (const auto& [k, v] : kv)
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
          throw ParseError(source, v.second, "unknown key '" + k + "' in [" + block.kind + "] block");
    };
    try {
      if (block.kind == "plant") {
        allowed({"word", "clusters", "occurrences"});
        WordPlant p;
        p.word = need("word");
        p.sources = per_slice_values<ContextSource>(need("clusters"), spec.slices, ContextSource::parse);
        if (kv.count("occurrences")) p.occurrences = u64(kv["occurrences"].first, "occurrences");
        spec.plants.push_back(std::move(p));
      } else {
        allowed({"topic", "vehicle", "topic_cluster", "vehicle_cluster", "shared_cluster", "overlap", "occurrences"});
        PairPlant p;
        p.topic = need("topic");
        p.vehicle = need("vehicle");
        p.topic_cluster = u64(need("topic_cluster"), "topic_cluster");
        p.vehicle_cluster = u64(need("vehicle_cluster"), "vehicle_cluster");
        p.shared_cluster = u64(need("shared_cluster"), "shared_cluster");
        p.overlap = per_slice_values<double>(need("overlap"), spec.slices,
                                             [](const std::string& s) { return parse_double(s, "overlap"); });
        if (kv.count("occurrences")) p.occurrences = u64(kv["occurrences"].first, "occurrences");
        spec.pairs.push_back(std::move(p));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(source, block.line, e.what());
    }
  }
  spec.validate();
  return spec;
}

PlantSpec PlantSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse(in, path.string());
}

void PlantSpec::write(std::ostream& out) const {
  out << "vocab_size = " << vocab_size << '\n'
      << "tokens_per_slice = " << tokens_per_slice << '\n'
      << "seed = " << seed << '\n'
      << "slices = ";
  for (std::size_t i = 0; i < slices.size(); ++i) out << (i ? ", " : "") << slices[i].name();
  out << '\n'
      << "cluster_size = " << cluster_size << '\n'
      << "window = " << window << '\n'
      << "doc_length = " << doc_length << '\n'
      << "occurrences = " << occurrences << '\n'
      << "background = " << (background == Background::Uniform ? "uniform" : "clustered") << '\n'
      << "segment_length = " << segment_length << '\n'
      << "segment_noise = " << format_double(segment_noise) << '\n';
  for (const auto& p : plants) {
    out << "\n[plant]\nword = " << p.word << "\nclusters = ";
    bool first = true;
    for (const auto& s : slices) {
      out << (first ? "" : ", ") << s.name() << ':' << p.sources.at(s).str();
      first = false;
    }
    out << '\n';
    if (p.occurrences) out << "occurrences = " << *p.occurrences << '\n';
  }
  for (const auto& p : pairs) {
    out << "\n[pair]\ntopic = " << p.topic << "\nvehicle = " << p.vehicle << "\ntopic_cluster = " << p.topic_cluster
        << "\nvehicle_cluster = " << p.vehicle_cluster << "\nshared_cluster = " << p.shared_cluster << "\noverlap = ";
    bool first = true;
    for (const auto& s : slices) {
      out << (first ? "" : ", ") << s.name() << ':' << format_double(p.overlap.at(s));
      first = false;
    }
    out << '\n';
    if (p.occurrences) out << "occurrences = " << *p.occurrences << '\n';
  }
}

// ---------------------------------------------------------------------------
// Generation

namespace {

using Episode = std::vector<std::string>;

class EpisodeBuilder {
 public:
  EpisodeBuilder(const SynthCorpus& corpus, std::size_t window, Rng& rng)
      : corpus_(corpus), window_(window), rng_(rng) {}

  const std::string& draw(const ContextSource& src) {
    if (src.kind == ContextSource::Kind::Random) {
      std::uniform_int_distribution<std::size_t> pick(0, corpus_.background.size() - 1);
      return corpus_.background[pick(rng_)];
    }
    const auto& cluster = corpus_.clusters.at(src.cluster);
    std::uniform_int_distribution<std::size_t> pick(0, cluster.size() - 1);
    return cluster[pick(rng_)];
  }

  void fill(Episode& e, const ContextSource& src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) e.push_back(draw(src));
  }

  Episode single(const std::string& word, const ContextSource& src) {
    Episode e;
    fill(e, src, window_);
    e.push_back(word);
    fill(e, src, window_);
    return e;
  }

  // topic, one context token, vehicle: both inside one window.
  Episode joint(const std::string& a, const std::string& b, const ContextSource& src) {
    Episode e;
    fill(e, src, window_);
    e.push_back(a);
    fill(e, src, 1);
    e.push_back(b);
    fill(e, src, window_);
    return e;
  }

 private:
  const SynthCorpus& corpus_;
  std::size_t window_;
  Rng& rng_;
};

ContextSource cluster(std::size_t c) { return {ContextSource::Kind::Cluster, c}; }

CorpusSlice generate_slice(const PlantSpec& spec, const SynthCorpus& corpus, const SliceId& id) {
  Rng rng(slice_seed(spec.seed ^ 0x73796e7468ULL, id));
  EpisodeBuilder builder(corpus, spec.window, rng);

  std::vector<Episode> episodes;
  for (const auto& p : spec.plants) {
    const auto& src = p.sources.at(id);
    if (src.kind == ContextSource::Kind::Absent) continue;
    for (std::size_t i = 0, n = occurrences_of(spec, p.occurrences); i < n; ++i)
      episodes.push_back(builder.single(p.word, src));
  }
  for (const auto& p : spec.pairs) {
    const std::size_t occ = occurrences_of(spec, p.occurrences);
    const std::size_t shared = shared_episodes(p.overlap.at(id), occ);
    for (std::size_t i = 0; i < shared; ++i) {
      // alternate which word comes first so neither side owns the left context
      if (i % 2 == 0)
        episodes.push_back(builder.joint(p.topic, p.vehicle, cluster(p.shared_cluster)));
      else
        episodes.push_back(builder.joint(p.vehicle, p.topic, cluster(p.shared_cluster)));
    }
    for (std::size_t i = shared; i < occ; ++i) {
      episodes.push_back(builder.single(p.topic, cluster(p.topic_cluster)));
      episodes.push_back(builder.single(p.vehicle, cluster(p.vehicle_cluster)));
    }
  }
  std::shuffle(episodes.begin(), episodes.end(), rng);

  std::uint64_t episode_tokens = 0;
  for (const auto& e : episodes) episode_tokens += e.size();
  const std::uint64_t background_tokens = spec.tokens_per_slice - episode_tokens;

  // Episode e goes after gaps[e] background tokens.
  std::vector<std::uint64_t> gaps(episodes.size());
  std::uniform_int_distribution<std::uint64_t> gap_pick(0, background_tokens);
  for (auto& g : gaps) g = gap_pick(rng);
  std::sort(gaps.begin(), gaps.end());

  std::uniform_int_distribution<std::size_t> noise(0, corpus.background.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_cluster(0, corpus.clusters.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_member(0, spec.cluster_size - 1);
  std::bernoulli_distribution mixed_in(spec.segment_noise);
  const std::vector<std::string>* segment = nullptr;
  std::size_t segment_left = 0;
  auto background_token = [&]() -> const std::string& {
    if (spec.background == PlantSpec::Background::Uniform) return corpus.background[noise(rng)];
    if (segment_left == 0) {
      segment = &corpus.clusters[pick_cluster(rng)];
      segment_left = spec.segment_length;
    }
    --segment_left;
    if (mixed_in(rng)) return corpus.background[noise(rng)];
    return (*segment)[pick_member(rng)];
  };
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> doc;
  auto close_if_full = [&] {
    if (doc.size() >= spec.doc_length) {
      docs.push_back(std::move(doc));
      doc.clear();
    }
  };
  std::size_t next = 0;
  for (std::uint64_t b = 0; b <= background_tokens; ++b) {
    while (next < episodes.size() && gaps[next] == b) {
      if (!doc.empty() && doc.size() + episodes[next].size() > spec.doc_length) {
        docs.push_back(std::move(doc));
        doc.clear();
      }
      doc.insert(doc.end(), episodes[next].begin(), episodes[next].end());
      ++next;
      close_if_full();
    }
    if (b == background_tokens) break;
    doc.push_back(background_token());
    close_if_full();
  }
  if (!doc.empty()) docs.push_back(std::move(doc));
  return make_slice(id, std::move(docs));
}

}  // namespace

SynthCorpus generate(const PlantSpec& spec) {
  spec.validate();
  SynthCorpus out;
  const std::size_t n_background = spec.background_size();
  out.background.reserve(n_background);
  for (std::size_t i = 0; i < n_background; ++i) out.background.push_back(background_word(i));

  Rng rng(spec.seed);
  std::vector<std::size_t> perm(n_background);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t c = 0; c < spec.cluster_count(); ++c) {
    std::vector<std::string> words;
    for (std::size_t j = 0; j < spec.cluster_size; ++j) words.push_back(out.background[perm[c * spec.cluster_size + j]]);
    out.clusters.push_back(std::move(words));
  }
  for (const auto& id : spec.slices) out.slices.push_back(generate_slice(spec, out, id));
  return out;
}

void write_synth_corpus(const std::filesystem::path& dir, const PlantSpec& spec, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  for (const auto& slice : corpus.slices) {
    std::ofstream out(dir / (slice.id.name() + ".txt"), std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / (slice.id.name() + ".txt")).string());
    write_slice(out, slice);
  }
  {
    std::ofstream out(dir / "clusters.tsv", std::ios::binary);
    for (std::size_t c = 0; c < corpus.clusters.size(); ++c) {
      out << c << '\t';
      for (std::size_t j = 0; j < corpus.clusters[c].size(); ++j) out << (j ? " " : "") << corpus.clusters[c][j];
      out << '\n';
    }
  }
  std::ofstream out(dir / "spec.txt", std::ios::binary);
  spec.write(out);
}

double cooccurrence_rate(const CorpusSlice& slice, const std::string& a, const std::string& b, std::size_t window) {
  std::size_t occurrences = 0, hits = 0;
  for (const auto& doc : slice.documents)
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (doc[i] != a) continue;
      ++occurrences;
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(doc.size() - 1, i + window);
      for (std::size_t j = lo; j <= hi; ++j)
        if (j != i && doc[j] == b) {
          ++hits;
          break;
        }
    }
  if (occurrences == 0) throw UndefinedStatistic("word '" + a + "' does not occur");
  return static_cast<double>(hits) / static_cast<double>(occurrences);
}

}  // namespace twec
