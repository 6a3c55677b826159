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

#ifndef TWEC_TEXT_HPP
#define TWEC_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace twec {

/// How non-word code points inside a run of text are treated.
enum class PunctuationMode {
  Separator,  // "A—B" -> "a", "b"
  Strip,      // "A—B" -> "ab"
};

struct TokenizerConfig {
  bool lowercase = true;
  PunctuationMode punctuation = PunctuationMode::Separator;
};

/// Decodes UTF-8 into code points. Rejects overlong forms, surrogates and
/// truncated sequences with a DecodeError carrying the offending byte offset.
std::u32string decode_utf8(std::string_view text);

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view cps);

/// Simple case folding for Latin, Greek and Cyrillic scripts.
char32_t to_lower(char32_t cp);
std::string to_lower_utf8(std::string_view text);

bool is_space(char32_t cp);
bool is_punctuation(char32_t cp);

/// Splits text into lowercase word tokens. Whitespace always separates;
/// punctuation and symbols separate or vanish depending on the config.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {});

/// Whitespace split without any normalisation.
std::vector<std::string> split_whitespace(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace twec

#endif  // TWEC_TEXT_HPP
