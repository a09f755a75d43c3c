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

#include <filesystem>
#include <sstream>

#include "dialect/checkpoint.hpp"
#include "dialect/error.hpp"
#include "dialect/random.hpp"
#include "dialect/textcodec.hpp"
#include "dialect/vocabulary.hpp"
#include "doctest.h"

using namespace dialect;

namespace {

ParallelExample Ex(std::string id, std::vector<std::string> src, std::vector<std::string> tgt) {
  return {std::move(id), std::move(src), std::move(tgt)};
}

std::vector<ParallelExample> AbCorpus() {
  return {Ex("D1", {"ab", "ba"}, {"aa", "b"}), Ex("D2", {"b"}, {"ab"})};
}

DialectManifest AbManifest() { return DialectManifest(std::vector<DialectInfo>{{"D1", "D1"}, {"D2", "D2"}}); }

Checkpoint SmallCheckpoint(std::uint64_t seed) {
  Checkpoint c;
  c.vocab = Vocabulary::Build(AbCorpus(), AbManifest());
  ModelShape shape{c.vocab.size(), 4, 6, 2};
  Rng rng(seed);
  c.params = ModelParams<float>::Random(shape, 0.1, rng);
  c.mode = FlagMode::kFlagged;
  c.dialect = "D2";
  return c;
}

std::string Bytes(const Checkpoint& c) {
  std::ostringstream out;
  WriteCheckpoint(out, c);
  return out.str();
}

ErrorCode ReadError(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    ReadCheckpoint(in);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;  // never a checkpoint error code; fails the caller's check
}

}  // namespace

TEST_CASE("vocabulary layout") {
  auto v = Vocabulary::Build(AbCorpus(), AbManifest());
  CHECK(v.size() == 9);
  CHECK(v.entry(Vocabulary::kPad).kind == Vocabulary::Entry::Kind::kSpecial);
  CHECK(v.entry(Vocabulary::kBoundaryId).kind == Vocabulary::Entry::Kind::kBoundary);
  CHECK(v.FlagId("D1") == 5);
  CHECK(v.FlagId("D2") == 6);
  CHECK_FALSE(v.FlagId("D3").has_value());
  CHECK(v.CharId(U'a') == 7);
  CHECK(v.CharId(U'b') == 8);
  CHECK(v.CharId(U'z') == Vocabulary::kUnk);
  CHECK(Vocabulary::Build(AbCorpus(), AbManifest()) == v);
}

TEST_CASE("vocabulary ids") {
  auto v = Vocabulary::Build(AbCorpus(), AbManifest());
  auto seq = AddFlag(Encode({"ab", "b"}), "D2", AbManifest());
  CHECK(v.SourceIds(seq) == std::vector<int>{6, 7, 8, 4, 8});
  CHECK(v.TargetIds(Encode({"ba"})) == std::vector<int>{1, 8, 7, 2});
  CHECK_THROWS_AS(v.TargetIds(seq), Error);
  CHECK(v.WordsFromIds({8, 4, 4, 7, 3, 7, 2, 8}) == std::vector<std::string>{"b", "aa"});
  CHECK(v.WordsFromIds({}).empty());
  std::stringstream io;
  v.Write(io);
  CHECK(Vocabulary::Read(io) == v);
}

TEST_CASE("checkpoint round trip is byte identical") {
  auto c = SmallCheckpoint(5);
  auto path = std::filesystem::temp_directory_path() / "dialect_ckpt_test.ckpt";
  SaveCheckpoint(path, c);
  auto loaded = LoadCheckpoint(path);
  std::filesystem::remove(path);
  CHECK(loaded.vocab == c.vocab);
  CHECK(loaded.mode == FlagMode::kFlagged);
  CHECK(loaded.dialect == "D2");
  CHECK(loaded.params.shape == c.params.shape);
  CHECK(Bytes(loaded) == Bytes(c));
  CHECK(Bytes(c).substr(0, 8) == "DIALCKPT");
}

TEST_CASE("group serialization") {
  auto a = SmallCheckpoint(5);
  auto b = a;
  b.params.encoder[1].weight(0, 0) += 1.0f;
  CHECK(SerializeGroup(a.params, groups::kSourceEmbedding) == SerializeGroup(b.params, groups::kSourceEmbedding));
  CHECK(SerializeGroup(a.params, "encoder.layer1") == SerializeGroup(b.params, "encoder.layer1"));
  CHECK(SerializeGroup(a.params, "encoder.layer2") != SerializeGroup(b.params, "encoder.layer2"));
  CHECK_THROWS_AS(SerializeGroup(a.params, "encoder.layer9"), Error);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string good = Bytes(SmallCheckpoint(5));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(ReadError(bad_magic) == ErrorCode::kCheckpoint);
  std::string bad_version = good;
  bad_version[8] = 9;
  CHECK(ReadError(bad_version) == ErrorCode::kCheckpoint);
  CHECK(ReadError(good.substr(0, good.size() - 3)) == ErrorCode::kCheckpoint);
  CHECK(ReadError(good + "x") == ErrorCode::kCheckpoint);
  CHECK(ReadError("") == ErrorCode::kCheckpoint);
  CHECK_THROWS_AS(LoadCheckpoint("/nonexistent/dir/model.ckpt"), Error);
}

TEST_CASE("flag mode names") {
  CHECK(ParseFlagMode("flagged") == FlagMode::kFlagged);
  CHECK(ParseFlagMode("plain") == FlagMode::kPlain);
  CHECK(FlagModeName(FlagMode::kFlagged) == "flagged");
  CHECK_THROWS_AS(ParseFlagMode("sometimes"), Error);
}
