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

#ifndef TWEC_MODEL_IO_HPP
#define TWEC_MODEL_IO_HPP

// On-disk layout:
//   compass dir: vocab.tsv, target.vec (U), context.vec (C0), compass.meta
//   slice dir:   vectors.vec (C_i), slice.meta
// *.vec files use the word2vec text format; *.meta files are key=value.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "twec/keyvalue.hpp"
#include "twec/training.hpp"

namespace twec {

struct WordVectors {
  std::vector<std::string> words;
  Matrix vectors;
};

void write_word2vec_text(std::ostream& out, const std::vector<std::string>& words, const Matrix& m);
WordVectors read_word2vec_text(std::istream& in, const std::string& source = "<vectors>");

void hyperparams_to_kv(const Hyperparams& hp, KeyValues& kv);
Hyperparams hyperparams_from_kv(const KeyValues& kv);

void tokenizer_to_kv(const TokenizerConfig& cfg, KeyValues& kv);
TokenizerConfig tokenizer_from_kv(const KeyValues& kv);

/// Hex bitmap, word i is bit (i % 8) of byte (i / 8).
std::string encode_bitmap(const std::vector<bool>& bits);
std::vector<bool> decode_bitmap(const std::string& hex, std::size_t n);

struct LoadedCompass {
  CompassModel model;
  TokenizerConfig tokenizer;
};

void save_compass(const std::filesystem::path& dir, const CompassModel& model,
                  const TokenizerConfig& tokenizer);
LoadedCompass load_compass(const std::filesystem::path& dir);

void save_slice_model(const std::filesystem::path& dir, const SliceEmbeddings& model);
/// Rows must line up with `vocab`. Passing nullptr builds a words-only
/// vocabulary from the vector file (enough for neighbour queries).
SliceEmbeddings load_slice_model(const std::filesystem::path& dir,
                                 std::shared_ptr<const Vocabulary> vocab = nullptr);

}  // namespace twec

#endif  // TWEC_MODEL_IO_HPP
