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

#include "dialect/vocabulary.hpp"

#include <set>

#include "dialect/binary_io.hpp"
#include "dialect/error.hpp"
#include "dialect/model.hpp"
#include "dialect/utf8.hpp"

namespace dialect {

static_assert(Vocabulary::kPad == kPadId && Vocabulary::kBos == kBosId && Vocabulary::kEos == kEosId);

Vocabulary::Vocabulary() {
  using K = Entry::Kind;
  entries_ = {
      {K::kSpecial, 0, {}, "<pad>"},
      {K::kSpecial, 0, {}, "<s>"},
      {K::kSpecial, 0, {}, "</s>"},
      {K::kSpecial, 0, {}, "<unk>"},
      {K::kBoundary, kBoundary, {}, "_"},
  };
  Index();
}

Vocabulary Vocabulary::Build(const std::vector<ParallelExample>& examples, const DialectManifest& dialects) {
  if (examples.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot build a vocabulary from no examples");
  Vocabulary vocab;
  for (const auto& d : dialects.dialects()) {
    vocab.entries_.push_back({Entry::Kind::kFlag, 0, d, d.name});
  }
  std::set<char32_t> chars;
  for (const auto& ex : examples) {
    for (const auto* side : {&ex.source_words, &ex.target_words}) {
      for (const auto& w : *side) {
        for (char32_t c : utf8::Decode(w)) {
          if (c != kBoundary) chars.insert(c);
        }
      }
    }
  }
  for (char32_t c : chars) vocab.entries_.push_back({Entry::Kind::kChar, c, {}, utf8::Encode(c)});
  vocab.Index();
  return vocab;
}

void Vocabulary::Index() {
  char_ids_.clear();
  flag_ids_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    int id = static_cast<int>(i);
    if (e.kind == Entry::Kind::kChar && !char_ids_.emplace(e.ch, id).second) {
      throw Error(ErrorCode::kVocabulary, "duplicate character " + e.text);
    }
    if (e.kind == Entry::Kind::kFlag && !flag_ids_.emplace(e.dialect.id, id).second) {
      throw Error(ErrorCode::kVocabulary, "duplicate flag " + e.dialect.id);
    }
  }
}

int Vocabulary::CharId(char32_t ch) const {
  if (ch == kBoundary) return kBoundaryId;
  auto it = char_ids_.find(ch);
  return it == char_ids_.end() ? kUnk : it->second;
}

std::optional<int> Vocabulary::FlagId(const std::string& dialect_id) const {
  auto it = flag_ids_.find(dialect_id);
  if (it == flag_ids_.end()) return std::nullopt;
  return it->second;
}

DialectManifest Vocabulary::Flags() const {
  std::vector<DialectInfo> out;
  for (const auto& e : entries_) {
    if (e.kind == Entry::Kind::kFlag) out.push_back(e.dialect);
  }
  return DialectManifest(std::move(out));
}

std::vector<int> Vocabulary::SourceIds(const EncodedSequence& seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  if (seq.flag) {
    auto id = FlagId(seq.flag->id);
    if (!id) throw Error(ErrorCode::kUnknownDialect, "no flag for dialect '" + seq.flag->id + "'");
    ids.push_back(*id);
  }
  for (char32_t c : seq.symbols) ids.push_back(CharId(c));
  return ids;
}

std::vector<int> Vocabulary::TargetIds(const EncodedSequence& seq) const {
  if (seq.flag) throw Error(ErrorCode::kInvalidArgument, "target sequences carry no flag");
  std::vector<int> ids;
  ids.reserve(seq.size() + 2);
  ids.push_back(kBos);
  for (char32_t c : seq.symbols) ids.push_back(CharId(c));
  ids.push_back(kEos);
  return ids;
}

std::vector<std::string> Vocabulary::WordsFromIds(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(utf8::Encode(current));
    current.clear();
  };
  for (int id : ids) {
    if (id == kEos) break;
    if (id < 0 || static_cast<std::size_t>(id) >= entries_.size()) {
      throw Error(ErrorCode::kVocabulary, "id " + std::to_string(id) + " out of range");
    }
    const auto& e = entries_[static_cast<std::size_t>(id)];
    if (e.kind == Entry::Kind::kBoundary) {
      flush();
    } else if (e.kind == Entry::Kind::kChar) {
      current.push_back(e.ch);
    }
  }
  flush();
  return words;
}

std::string Vocabulary::Render(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += entry(id).text;
  }
  return out;
}

void Vocabulary::Write(std::ostream& out) const {
  binary::WriteU32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    binary::WriteU8(out, static_cast<std::uint8_t>(e.kind));
    switch (e.kind) {
      case Entry::Kind::kSpecial:
      case Entry::Kind::kBoundary:
        binary::WriteString(out, e.text);
        break;
      case Entry::Kind::kFlag:
        binary::WriteString(out, e.dialect.id);
        binary::WriteString(out, e.dialect.name);
        break;
      case Entry::Kind::kChar:
        binary::WriteU32(out, static_cast<std::uint32_t>(e.ch));
        break;
    }
  }
}

Vocabulary Vocabulary::Read(std::istream& in) {
  using K = Entry::Kind;
  Vocabulary reserved;
  std::uint32_t n = binary::ReadU32(in);
  if (n < kNumReserved || n > (1u << 22)) throw Error(ErrorCode::kCheckpoint, "bad vocabulary size");
  Vocabulary vocab;
  vocab.entries_.clear();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto kind = static_cast<K>(binary::ReadU8(in));
    Entry e{kind, 0, {}, {}};
    switch (kind) {
      case K::kSpecial:
      case K::kBoundary:
        e.text = binary::ReadString(in);
        if (kind == K::kBoundary) e.ch = kBoundary;
        break;
      case K::kFlag:
        e.dialect.id = binary::ReadString(in);
        e.dialect.name = binary::ReadString(in);
        e.text = e.dialect.name;
        break;
      case K::kChar:
        e.ch = static_cast<char32_t>(binary::ReadU32(in));
        if (e.ch > 0x10FFFF) throw Error(ErrorCode::kCheckpoint, "bad code point in vocabulary");
        e.text = utf8::Encode(e.ch);
        break;
      default:
        throw Error(ErrorCode::kCheckpoint, "bad vocabulary entry kind");
    }
    if (i < kNumReserved && !(e == reserved.entries_[i])) {
      throw Error(ErrorCode::kCheckpoint, "reserved vocabulary ids do not match");
    }
    vocab.entries_.push_back(std::move(e));
  }
  vocab.Index();
  return vocab;
}

}  // namespace dialect
