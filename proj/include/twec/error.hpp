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

#ifndef TWEC_ERROR_HPP
#define TWEC_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twec {

/// Bad arguments, malformed configuration or input schema. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs are well formed but inconsistent with each other. CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public ValidationError {
 public:
  DecodeError(const std::string& what, std::size_t byte_offset)
      : ValidationError(what + " at byte offset " + std::to_string(byte_offset)),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VocabularyMiss : public DataError {
 public:
  explicit VocabularyMiss(const std::string& word)
      : DataError("word not in vocabulary: '" + word + "'"), word_(word) {}

  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

/// Two embedding spaces that were not trained against the same compass.
class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

/// Training produced non-finite parameters or a runaway loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Statistic undefined for the given data (zero variance, too few pairs, zero-norm vector).
class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace twec

#endif  // TWEC_ERROR_HPP
