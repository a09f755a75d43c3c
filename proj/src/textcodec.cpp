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

#include "dialect/textcodec.hpp"

#include <algorithm>

#include "dialect/error.hpp"
#include "dialect/utf8.hpp"

namespace dialect {

std::string EncodedSequence::ToString() const {
  std::string out;
  if (flag) out += flag->name;
  for (char32_t cp : symbols) {
    if (!out.empty()) out.push_back(' ');
    out += utf8::Encode(cp);
  }
  return out;
}

EncodedSequence Encode(const std::vector<std::string>& words) {
  if (words.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty word list");
  EncodedSequence seq;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto chars = utf8::Decode(words[i]);
    if (chars.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot encode an empty word");
    for (char32_t cp : chars) {
      if (cp == kBoundary || utf8::IsSpace(cp)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "word '" + words[i] + "' contains a reserved symbol");
      }
    }
    if (i) seq.symbols.push_back(kBoundary);
    seq.symbols += chars;
  }
  return seq;
}

std::vector<std::string> Decode(const EncodedSequence& seq) {
  if (seq.flag) throw Error(ErrorCode::kInvalidArgument, "cannot decode a flagged sequence");
  if (seq.symbols.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot decode an empty sequence");
  std::vector<std::string> words;
  std::u32string current;
  for (char32_t cp : seq.symbols) {
    if (cp == kBoundary) {
      if (current.empty()) throw Error(ErrorCode::kInvalidArgument, "misplaced word boundary");
      words.push_back(utf8::Encode(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (current.empty()) throw Error(ErrorCode::kInvalidArgument, "sequence ends with a word boundary");
  words.push_back(utf8::Encode(current));
  return words;
}

EncodedSequence AddFlag(const EncodedSequence& seq, const std::string& dialect_id,
                        const DialectManifest& dialects) {
  if (seq.flag) throw Error(ErrorCode::kInvalidArgument, "sequence is already flagged");
  EncodedSequence out = seq;
  out.flag = dialects.Find(dialect_id);
  return out;
}

std::vector<Chunk> ChunkSentence(const std::vector<std::string>& words, std::size_t size,
                                 std::size_t sentence_index) {
  if (words.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot chunk an empty sentence");
  if (size == 0) throw Error(ErrorCode::kInvalidArgument, "chunk size must be at least 1");
  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < words.size(); start += size) {
    std::size_t end = std::min(words.size(), start + size);
    chunks.push_back({std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(start),
                                               words.begin() + static_cast<std::ptrdiff_t>(end)),
                      sentence_index, chunks.size()});
  }
  return chunks;
}

TruncationResult TruncateToSource(const std::vector<std::string>& predicted,
                                  std::size_t source_word_count) {
  if (source_word_count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "source word count must be at least 1");
  }
  TruncationResult result;
  result.over_generated = predicted.size() > source_word_count;
  result.under_generated = predicted.size() < source_word_count;
  std::size_t keep = std::min(predicted.size(), source_word_count);
  result.words.assign(predicted.begin(), predicted.begin() + static_cast<std::ptrdiff_t>(keep));
  return result;
}

}  // namespace dialect
