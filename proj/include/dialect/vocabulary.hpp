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

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialect/corpus.hpp"
#include "dialect/textcodec.hpp"

namespace dialect {

/// Symbol <-> id bijection shared by the source and target side.
///
/// Layout: PAD, BOS, EOS, UNK, '_' at ids 0-4, then one flag per dialect in
/// manifest order, then the corpus characters sorted by code point.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kBoundaryId = 4;
  static constexpr int kNumReserved = 5;

  struct Entry {
    enum class Kind : unsigned char { kSpecial = 0, kBoundary = 1, kFlag = 2, kChar = 3 };
    Kind kind;
    char32_t ch = 0;        // kChar
    DialectInfo dialect;    // kFlag
    std::string text;       // display form

    bool operator==(const Entry& other) const {
      return kind == other.kind && ch == other.ch && dialect.id == other.dialect.id &&
             dialect.name == other.dialect.name && text == other.text;
    }
  };

  Vocabulary();

  static Vocabulary Build(const std::vector<ParallelExample>& examples, const DialectManifest& dialects);

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }

  /// UNK for characters that were not seen when building.
  int CharId(char32_t ch) const;
  bool HasChar(char32_t ch) const { return char_ids_.count(ch) > 0; }
  std::optional<int> FlagId(const std::string& dialect_id) const;
  DialectManifest Flags() const;

  /// Flag (if any) followed by the symbols; no BOS/EOS.
  std::vector<int> SourceIds(const EncodedSequence& seq) const;
  /// BOS, symbols, EOS. Flags are rejected on the target side.
  std::vector<int> TargetIds(const EncodedSequence& seq) const;

  /// Reads model output leniently: stops at EOS, ignores non-character
  /// symbols, splits on '_' and drops empty words.
  std::vector<std::string> WordsFromIds(const std::vector<int>& ids) const;
  std::string Render(const std::vector<int>& ids) const;

  void Write(std::ostream& out) const;
  static Vocabulary Read(std::istream& in);

  bool operator==(const Vocabulary& other) const { return entries_ == other.entries_; }

 private:
  void Index();

  std::vector<Entry> entries_;
  std::map<char32_t, int> char_ids_;
  std::map<std::string, int> flag_ids_;
};

}  // namespace dialect
