// Copyright 2026 The dialect-adapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Word lists <-> character sequences with '_' word boundaries, dialect
// flags, three-word chunking and truncation of over-generated output.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dialect/corpus.hpp"

namespace dialect {

inline constexpr char32_t kBoundary = U'_';
inline constexpr std::size_t kDefaultChunkSize = 3;

/// Character-level model input. The flag, when present, is one atomic
/// symbol in front of the characters.
struct EncodedSequence {
  std::optional<DialectInfo> flag;
  // Characters of the words with kBoundary between adjacent words.
  std::u32string symbols;

  std::size_t size() const { return symbols.size() + (flag ? 1 : 0); }

  /// Space-separated rendering, e.g. "IS m i n ä _ k u n".
  std::string ToString() const;

  bool operator==(const EncodedSequence& other) const {
    return symbols == other.symbols && flag.has_value() == other.flag.has_value() &&
           (!flag || (flag->id == other.flag->id && flag->name == other.flag->name));
  }
};

EncodedSequence Encode(const std::vector<std::string>& words);

/// Strict inverse of Encode; rejects flags and misplaced boundaries.
std::vector<std::string> Decode(const EncodedSequence& seq);

/// Prepends the flag of `dialect_id`, which must be declared in `dialects`.
EncodedSequence AddFlag(const EncodedSequence& seq, const std::string& dialect_id,
                        const DialectManifest& dialects);

struct Chunk {
  std::vector<std::string> words;
  std::size_t sentence_index = 0;
  std::size_t chunk_index = 0;
};

/// Non-overlapping left-to-right windows of `size` words; the last may be shorter.
std::vector<Chunk> ChunkSentence(const std::vector<std::string>& words,
                                 std::size_t size = kDefaultChunkSize,
                                 std::size_t sentence_index = 0);

struct TruncationResult {
  std::vector<std::string> words;
  bool over_generated = false;
  bool under_generated = false;
};

/// Keeps at most `source_word_count` predicted words.
TruncationResult TruncateToSource(const std::vector<std::string>& predicted,
                                  std::size_t source_word_count);

}  // namespace dialect
