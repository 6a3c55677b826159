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

#include "twec/model_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "twec/error.hpp"

namespace twec {

namespace fs = std::filesystem;

void write_word2vec_text(std::ostream& out, const std::vector<std::string>& words, const Matrix& m) {
  if (words.size() != m.rows()) throw ValidationError("word list does not match matrix rows");
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << words[r];
    for (float v : m.row(r)) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
      out << buf;
    }
    out << '\n';
  }
}

WordVectors read_word2vec_text(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing 'V dim' header");
  std::istringstream head(line);
  std::size_t rows = 0, cols = 0;
  if (!(head >> rows >> cols) || cols == 0) throw ParseError(source, 1, "bad 'V dim' header");
  WordVectors out;
  out.words.reserve(rows);
  out.vectors = Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw ParseError(source, r + 2, "unexpected end of file");
    const auto fields = split_whitespace(line);
    if (fields.size() != cols + 1)
      throw ParseError(source, r + 2, "expected word and " + std::to_string(cols) + " values");
    out.words.push_back(fields[0]);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& f = fields[c + 1];
      float v = 0;
      const auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size())
        throw ParseError(source, r + 2, "bad value '" + f + "'");
      out.vectors(r, c) = v;
    }
  }
  return out;
}

void hyperparams_to_kv(const Hyperparams& hp, KeyValues& kv) {
  kv.set("dim", std::to_string(hp.dim));
  kv.set("window", std::to_string(hp.window));
  kv.set("negatives", std::to_string(hp.negatives));
  kv.set("epochs", std::to_string(hp.epochs));
  kv.set("initial_lr", format_double(hp.initial_lr));
  kv.set("min_lr", format_double(hp.min_lr));
  kv.set("subsample_t", format_double(hp.subsample_t));
  kv.set("seed", std::to_string(hp.seed));
  kv.set("deterministic", hp.deterministic ? "true" : "false");
  kv.set("threads", std::to_string(hp.threads));
}

Hyperparams hyperparams_from_kv(const KeyValues& kv) {
  Hyperparams hp;
  hp.dim = kv.require_u64("dim");
  hp.window = kv.require_u64("window");
  hp.negatives = kv.require_u64("negatives");
  hp.epochs = kv.require_u64("epochs");
  hp.initial_lr = kv.require_double("initial_lr");
  hp.min_lr = kv.require_double("min_lr");
  hp.subsample_t = kv.require_double("subsample_t");
  hp.seed = kv.require_u64("seed");
  hp.deterministic = parse_bool(kv.require("deterministic"), "deterministic");
  hp.threads = kv.require_u64("threads");
  return hp;
}

void tokenizer_to_kv(const TokenizerConfig& cfg, KeyValues& kv) {
  kv.set("lowercase", cfg.lowercase ? "true" : "false");
  kv.set("punctuation", cfg.punctuation == PunctuationMode::Separator ? "separator" : "strip");
}

TokenizerConfig tokenizer_from_kv(const KeyValues& kv) {
  TokenizerConfig cfg;
  if (auto v = kv.get("lowercase")) cfg.lowercase = parse_bool(*v, "lowercase");
  if (auto v = kv.get("punctuation")) {
    if (*v == "separator")
      cfg.punctuation = PunctuationMode::Separator;
    else if (*v == "strip")
      cfg.punctuation = PunctuationMode::Strip;
    else
      throw ValidationError("punctuation must be 'separator' or 'strip'");
  }
  return cfg;
}

std::string encode_bitmap(const std::vector<bool>& bits) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  const std::size_t bytes = (bits.size() + 7) / 8;
  out.reserve(bytes * 2);
  for (std::size_t b = 0; b < bytes; ++b) {
    unsigned v = 0;
    for (std::size_t k = 0; k < 8 && b * 8 + k < bits.size(); ++k)
      if (bits[b * 8 + k]) v |= 1u << k;
    out.push_back(digits[v >> 4]);
    out.push_back(digits[v & 15]);
  }
  return out;
}

std::vector<bool> decode_bitmap(const std::string& hex, std::size_t n) {
  if (hex.size() != (n + 7) / 8 * 2) throw ValidationError("bitmap length does not match vocabulary size");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw ValidationError("bad hex digit in bitmap");
  };
  std::vector<bool> bits(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned byte = nibble(hex[(i / 8) * 2]) << 4 | nibble(hex[(i / 8) * 2 + 1]);
    bits[i] = (byte >> (i % 8)) & 1u;
  }
  return bits;
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  return in;
}

std::uint64_t parse_hex64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ValidationError(what + ": bad fingerprint '" + s + "'");
  return v;
}

}  // namespace

void save_compass(const fs::path& dir, const CompassModel& model, const TokenizerConfig& tokenizer) {
  fs::create_directories(dir);
  const Vocabulary& vocab = *model.vocab;
  {
    auto out = open_out(dir / "vocab.tsv");
    write_vocab_dump(out, vocab);
  }
  {
    auto out = open_out(dir / "target.vec");
    write_word2vec_text(out, vocab.words(), model.target);
  }
  {
    auto out = open_out(dir / "context.vec");
    write_word2vec_text(out, vocab.words(), model.context);
  }
  KeyValues meta;
  meta.add("kind", "compass");
  meta.add("fingerprint", hex64(model.fingerprint()));
  meta.add("vocab_size", std::to_string(vocab.size()));
  meta.add("min_count", std::to_string(vocab.min_count()));
  for (std::size_t s = 0; s < vocab.slices().size(); ++s)
    meta.add("slice_tokens." + vocab.slices()[s].name(), std::to_string(vocab.slice_total(s)));
  hyperparams_to_kv(model.hyperparams, meta);
  tokenizer_to_kv(tokenizer, meta);
  for (std::size_t e = 0; e < model.epoch_loss.size(); ++e)
    meta.add("epoch_loss." + std::to_string(e + 1), format_double(model.epoch_loss[e]));
  meta.save(dir / "compass.meta");
}

LoadedCompass load_compass(const fs::path& dir) {
  const auto meta = KeyValues::load(dir / "compass.meta");
  if (meta.require("kind") != "compass") throw ValidationError(dir.string() + " is not a compass directory");
  std::vector<std::uint64_t> totals;
  {
    // slice order follows the vocab header
    auto in = open_in(dir / "vocab.tsv");
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string col;
    std::size_t i = 0;
    while (std::getline(hs, col, '\t')) {
      if (i++ >= 2) {
        if (!col.empty() && col.back() == '\r') col.pop_back();
        totals.push_back(meta.require_u64("slice_tokens." + col));
      }
    }
  }
  auto in = open_in(dir / "vocab.tsv");
  auto vocab = std::make_shared<const Vocabulary>(
      read_vocab_dump(in, totals, meta.require_u64("min_count"), (dir / "vocab.tsv").string()));

  LoadedCompass out;
  out.tokenizer = tokenizer_from_kv(meta);
  out.model.vocab = vocab;
  out.model.hyperparams = hyperparams_from_kv(meta);
  for (std::size_t e = 1;; ++e) {
    auto v = meta.get("epoch_loss." + std::to_string(e));
    if (!v) break;
    out.model.epoch_loss.push_back(parse_double(*v, "epoch_loss"));
  }
  for (const char* name : {"target.vec", "context.vec"}) {
    auto vin = open_in(dir / name);
    auto wv = read_word2vec_text(vin, (dir / name).string());
    if (wv.words != vocab->words())
      throw DataError((dir / name).string() + ": rows do not match the vocabulary");
    (std::string(name) == "target.vec" ? out.model.target : out.model.context) = std::move(wv.vectors);
  }
  const auto expected = parse_hex64(meta.require("fingerprint"), "compass.meta");
  if (out.model.fingerprint() != expected)
    throw DataError("compass " + dir.string() + " fingerprint mismatch: metadata says " + hex64(expected) +
                    ", matrices hash to " + hex64(out.model.fingerprint()));
  return out;
}

void save_slice_model(const fs::path& dir, const SliceEmbeddings& model) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "vectors.vec");
    write_word2vec_text(out, model.vocab->words(), model.context);
  }
  KeyValues meta;
  meta.add("kind", "slice");
  meta.add("slice", model.slice.name());
  meta.add("epoch", model.slice.epoch);
  meta.add("genre", model.slice.genre);
  meta.add("compass_fingerprint", hex64(model.compass_fingerprint));
  meta.add("token_count", std::to_string(model.token_count));
  meta.add("vocab_size", std::to_string(model.vocab->size()));
  meta.add("trained_count", std::to_string(model.trained_count()));
  hyperparams_to_kv(model.hyperparams, meta);
  for (std::size_t e = 0; e < model.epoch_loss.size(); ++e)
    meta.add("epoch_loss." + std::to_string(e + 1), format_double(model.epoch_loss[e]));
  meta.add("trained_words", encode_bitmap(model.trained));
  meta.save(dir / "slice.meta");
}

SliceEmbeddings load_slice_model(const fs::path& dir, std::shared_ptr<const Vocabulary> vocab) {
  const auto meta = KeyValues::load(dir / "slice.meta");
  if (meta.require("kind") != "slice") throw ValidationError(dir.string() + " is not a slice model directory");
  auto in = open_in(dir / "vectors.vec");
  auto wv = read_word2vec_text(in, (dir / "vectors.vec").string());
  if (vocab) {
    if (wv.words != vocab->words())
      throw DataError((dir / "vectors.vec").string() + ": rows do not match the compass vocabulary");
  } else {
    std::vector<std::uint64_t> zeros(wv.words.size(), 0);
    vocab = std::make_shared<const Vocabulary>(
        Vocabulary::from_parts(wv.words, std::move(zeros), {}, {}, {}, 0));
  }
  SliceEmbeddings out;
  out.slice = SliceId{meta.require("epoch"), meta.require("genre")};
  if (out.slice.name() != meta.require("slice")) throw ValidationError("slice.meta: inconsistent slice name");
  out.vocab = std::move(vocab);
  out.context = std::move(wv.vectors);
  out.compass_fingerprint = parse_hex64(meta.require("compass_fingerprint"), "slice.meta");
  out.token_count = meta.require_u64("token_count");
  out.hyperparams = hyperparams_from_kv(meta);
  out.trained = decode_bitmap(meta.require("trained_words"), out.context.rows());
  for (std::size_t e = 1;; ++e) {
    auto v = meta.get("epoch_loss." + std::to_string(e));
    if (!v) break;
    out.epoch_loss.push_back(parse_double(*v, "epoch_loss"));
  }
  return out;
}

}  // namespace twec
